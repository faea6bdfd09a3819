#include "fairltr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "fairltr/dataset.hpp"

namespace fairltr {

double multi_group_objective(std::span<const double> pair_disparities) {
    double sum = 0.0;
    for (double d : pair_disparities) sum += d * d;
    return sum;
}

namespace {

std::vector<ClickRecord> full_info_records(const std::vector<Query>& queries) {
    std::vector<ClickRecord> out;
    out.reserve(queries.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& q = queries[qi];
        ClickRecord rec;
        rec.qid = q.id;
        rec.query_index = static_cast<int>(qi);
        rec.logged_ranking = Ranking::identity(q.size());
        rec.propensities.assign(q.size(), 1.0);
        rec.clicks.resize(q.size());
        for (int d = 0; d < q.size(); ++d)
            rec.clicks[d] = static_cast<std::uint8_t>(q.items[d].relevance);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

Trainer::Trainer(const DatasetSplit& data, std::vector<ClickRecord> train_logs,
                 std::vector<ClickRecord> val_logs, TrainConfig config,
                 ExaminationModel exam)
    : data_(data),
      train_logs_(std::move(train_logs)),
      val_logs_(std::move(val_logs)),
      cfg_(std::move(config)),
      exam_(exam) {
    if (cfg_.group_blind) dataset::mask_group_feature(data_);
    if (cfg_.full_info) {
        train_logs_ = full_info_records(data_.train);
        val_logs_ = full_info_records(data_.validation);
    }
    if (train_logs_.empty()) throw std::domain_error("empty training click log");

    for (int i = 0; i < data_.group_count; ++i)
        for (int j = i + 1; j < data_.group_count; ++j) pairs_.emplace_back(i, j);

    resolve_indices(train_logs_);
    resolve_indices(val_logs_);

    train_cache_.reserve(train_logs_.size());
    for (const auto& rec : train_logs_)
        train_cache_.push_back(make_cache(rec, data_.train[rec.query_index]));
    val_cache_.reserve(val_logs_.size());
    for (const auto& rec : val_logs_)
        val_cache_.push_back(make_cache(rec, data_.validation[rec.query_index]));
}

void Trainer::resolve_indices(std::vector<ClickRecord>& records) const {
    const std::vector<Query>* split = nullptr;
    if (&records == &train_logs_) split = &data_.train;
    else split = &data_.validation;
    std::unordered_map<std::string, int> by_qid;
    for (std::size_t i = 0; i < split->size(); ++i)
        by_qid[(*split)[i].id] = static_cast<int>(i);
    for (auto& rec : records) {
        if (rec.query_index >= 0 &&
            rec.query_index < static_cast<int>(split->size()) &&
            (*split)[rec.query_index].id == rec.qid)
            continue;
        auto it = by_qid.find(rec.qid);
        if (it == by_qid.end())
            throw std::runtime_error("click record references unknown query: " +
                                     rec.qid);
        rec.query_index = it->second;
    }
}

Trainer::RecordCache Trainer::make_cache(const ClickRecord& rec,
                                         const Query& q) const {
    if (rec.size() != q.size())
        throw std::runtime_error("click record / query size mismatch for " + rec.qid);
    RecordCache cache;
    cache.merit_hat.assign(data_.group_count, 0.0);
    cache.group_size.assign(data_.group_count, 0.0);
    const bool ips_utility = cfg_.ablation == Ablation::FullIps ||
                             cfg_.ablation == Ablation::UtilityIpsOnly;
    const bool ips_disparity = cfg_.ablation == Ablation::FullIps;
    for (int d = 0; d < q.size(); ++d) {
        cache.group_size[q.items[d].group] += 1.0;
        if (!rec.clicks[d]) continue;
        double p = rec.propensities[d];
        if (p <= 0.0) throw std::domain_error("zero propensity in click record");
        cache.clicked.emplace_back(d, ips_utility ? 1.0 / p : 1.0);
        cache.merit_hat[q.items[d].group] += ips_disparity ? 1.0 / p : 1.0;
    }
    return cache;
}

TrainState Trainer::make_state(std::uint64_t run_seed) const {
    TrainState st;
    st.pair_disparity.assign(pairs_.size(), RunningMean(cfg_.running_window));
    st.gamma = cfg_.entropy_gamma_init;
    st.rng = Rng(derive_seed(run_seed, "train"));
    return st;
}

void Trainer::apply_update(Scorer& policy, std::span<const double> ascent_grad,
                           TrainState& state) const {
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer_for_model() == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < policy.params.size(); ++i)
            policy.params[i] += lr * ascent_grad[i];
        return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (state.adam_m.empty()) {
        state.adam_m.assign(policy.params.size(), 0.0);
        state.adam_v.assign(policy.params.size(), 0.0);
    }
    ++state.adam_t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.adam_t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.adam_t));
    for (std::size_t i = 0; i < policy.params.size(); ++i) {
        double g = ascent_grad[i];
        state.adam_m[i] = beta1 * state.adam_m[i] + (1.0 - beta1) * g;
        state.adam_v[i] = beta2 * state.adam_v[i] + (1.0 - beta2) * g * g;
        policy.params[i] += lr * (state.adam_m[i] / bc1) /
                            (std::sqrt(state.adam_v[i] / bc2) + eps);
    }
}

void Trainer::step(Scorer& policy, const ClickRecord& record, double lambda,
                   TrainState& state) const {
    const Query& q = data_.train[record.query_index];
    const std::ptrdiff_t rec_idx = &record - train_logs_.data();
    const bool cached =
        rec_idx >= 0 && rec_idx < static_cast<std::ptrdiff_t>(train_cache_.size());
    const RecordCache cache =
        cached ? train_cache_[rec_idx] : make_cache(record, q);
    const int n = q.size();
    const int G = data_.group_count;
    const std::size_t P = pairs_.size();
    const std::vector<double> scores = policy.scores(q);

    // Draw the ranking set: Monte-Carlo samples or exact enumeration.
    std::vector<Ranking> rankings;
    std::vector<double> weights;
    if (cfg_.exact_enumeration) {
        for (auto& [sigma, prob] : pl::enumerate(scores)) {
            rankings.push_back(std::move(sigma));
            weights.push_back(prob);
        }
    } else {
        const int S = cfg_.mc_samples;
        for (int s = 0; s < S; ++s) {
            rankings.push_back(pl::sample(scores, state.rng).sigma);
            weights.push_back(1.0 / S);
        }
    }
    const std::size_t S = rankings.size();

    // Per-sample reward, group exposures, pair diffs.
    std::vector<double> reward(S, 0.0);
    std::vector<std::vector<double>> diff(P, std::vector<double>(S, 0.0));
    std::vector<double> expo(G);
    const double eps_minus = cfg_.noise_eps_minus.value_or(0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const Ranking& sigma = rankings[s];
        for (auto [d, w] : cache.clicked)
            reward[s] += metric_weight(cfg_.metric, sigma.rank(d)) * w;
        std::fill(expo.begin(), expo.end(), 0.0);
        for (int d = 0; d < n; ++d)
            expo[q.items[d].group] += exam_.examine_prob(sigma.rank(d));
        for (std::size_t p = 0; p < P; ++p) {
            auto [i, j] = pairs_[p];
            double v = cache.merit_hat[j] * expo[i] - cache.merit_hat[i] * expo[j];
            if (eps_minus > 0.0)
                v -= eps_minus *
                     (cache.group_size[j] * expo[i] - cache.group_size[i] * expo[j]);
            diff[p][s] = v;
        }
    }

    // Control variates: weighted sample means.
    double reward_mean = 0.0;
    for (std::size_t s = 0; s < S; ++s) reward_mean += weights[s] * reward[s];
    std::vector<double> diff_mean(P, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t s = 0; s < S; ++s)
            diff_mean[p] += weights[s] * diff[p][s];

    // Score-space gradient.
    std::vector<double> score_grad(n, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        auto glp = pl::grad_log_prob_scores(scores, rankings[s]);
        double coeff = weights[s] * (reward[s] - reward_mean);
        if (lambda != 0.0) {
            for (std::size_t p = 0; p < P; ++p) {
                double running = state.pair_disparity[p].mean();
                coeff -= weights[s] * lambda * 2.0 * running *
                         (diff[p][s] - diff_mean[p]);
            }
        }
        for (int d = 0; d < n; ++d) score_grad[d] += coeff * glp[d];
    }
    if (state.gamma != 0.0) {
        auto eg = pl::entropy_grad_scores(scores);
        for (int d = 0; d < n; ++d) score_grad[d] += state.gamma * eg[d];
    }

    // Chain through the scorer, add L2, update.
    std::vector<double> param_grad(policy.param_count(), 0.0);
    policy.accumulate_param_grad(q, score_grad, param_grad);
    for (int i = 0; i < policy.param_count(); ++i)
        param_grad[i] -= cfg_.l2_coeff * policy.params[i];

    for (double g : param_grad)
        if (!std::isfinite(g))
            throw std::runtime_error(
                "non-finite gradient at step " + std::to_string(state.step_count) +
                " (qid " + record.qid + ", lambda " + std::to_string(lambda) + ")");

    if (cfg_.batch_size <= 1) {
        apply_update(policy, param_grad, state);
    } else {
        if (state.batch_grad.empty())
            state.batch_grad.assign(policy.params.size(), 0.0);
        for (std::size_t i = 0; i < param_grad.size(); ++i)
            state.batch_grad[i] += param_grad[i] / cfg_.batch_size;
        if (++state.batch_fill >= cfg_.batch_size) {
            apply_update(policy, state.batch_grad, state);
            std::fill(state.batch_grad.begin(), state.batch_grad.end(), 0.0);
            state.batch_fill = 0;
        }
    }

    // Running disparity buffers see this query only after the update.
    for (std::size_t p = 0; p < P; ++p)
        state.pair_disparity[p].push(diff_mean[p]);
    ++state.step_count;
    state.epoch_reward_sum += reward_mean;
    ++state.epoch_reward_count;
}

Trainer::ValMetrics Trainer::validate(const Scorer& policy) const {
    ValMetrics out;
    if (val_logs_.empty()) return out;
    const int G = data_.group_count;

    // One argmax ranking per validation query.
    std::vector<Ranking> argmax(data_.validation.size());
    std::vector<std::vector<double>> expo(data_.validation.size());
    for (std::size_t qi = 0; qi < data_.validation.size(); ++qi) {
        const Query& q = data_.validation[qi];
        argmax[qi] = pl::argmax_ranking(policy.scores(q));
        expo[qi].assign(G, 0.0);
        for (int d = 0; d < q.size(); ++d)
            expo[qi][q.items[d].group] +=
                exam_.examine_prob(argmax[qi].rank(d));
    }

    const double eps_minus = cfg_.noise_eps_minus.value_or(0.0);
    std::vector<double> pair_sum(pairs_.size(), 0.0);
    double util_sum = 0.0;
    for (std::size_t r = 0; r < val_logs_.size(); ++r) {
        const auto& rec = val_logs_[r];
        const auto& cache = val_cache_[r];
        const auto& sigma = argmax[rec.query_index];
        const auto& e = expo[rec.query_index];
        for (auto [d, w] : cache.clicked)
            util_sum += metric_weight(cfg_.metric, sigma.rank(d)) * w;
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            auto [i, j] = pairs_[p];
            double v = cache.merit_hat[j] * e[i] - cache.merit_hat[i] * e[j];
            if (eps_minus > 0.0)
                v -= eps_minus *
                     (cache.group_size[j] * e[i] - cache.group_size[i] * e[j]);
            pair_sum[p] += v;
        }
    }
    const double inv = 1.0 / static_cast<double>(val_logs_.size());
    out.utility = util_sum * inv;
    for (double s : pair_sum) {
        double mean = s * inv;
        out.disparity_sq += mean * mean;
    }
    return out;
}

TrainResult Trainer::train_one_lambda(double lambda) {
    return train_one_lambda(lambda, cfg_.seed);
}

TrainResult Trainer::train_one_lambda(double lambda, std::uint64_t run_seed) {
    if (data_.train.empty()) throw std::domain_error("empty training split");

    Scorer policy = cfg_.model == Scorer::Kind::Linear
                        ? Scorer::linear(data_.feature_count)
                        : Scorer::one_hidden(data_.feature_count, cfg_.hidden_width);
    policy.init_random(derive_seed(run_seed, "init"));
    TrainState state = make_state(run_seed);

    std::vector<int> order(train_logs_.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.best_val_objective = -std::numeric_limits<double>::infinity();
    result.policy = policy;
    int patience = 0;

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), state.rng);
        state.epoch_reward_sum = 0.0;
        state.epoch_reward_count = 0;
        for (int r : order) step(policy, train_logs_[r], lambda, state);

        std::vector<double> running(pairs_.size());
        for (std::size_t p = 0; p < pairs_.size(); ++p)
            running[p] = state.pair_disparity[p].mean();
        double train_obj =
            state.epoch_reward_sum / std::max<long long>(1, state.epoch_reward_count) -
            lambda * multi_group_objective(running);

        ValMetrics vm = validate(policy);
        result.trace.push_back({lambda, epoch, train_obj, vm.utility,
                                vm.disparity_sq, state.gamma});

        double val_obj = vm.objective(lambda);
        if (val_obj > result.best_val_objective + 1e-12) {
            result.best_val_objective = val_obj;
            result.policy = policy;
            patience = 0;
        } else if (++patience >= cfg_.plateau_patience) {
            state.gamma /= cfg_.gamma_decay_factor;
            patience = 0;
        }
    }
    return result;
}

SweepResult Trainer::sweep() {
    if (cfg_.lambda_grid.empty()) throw std::domain_error("empty lambda grid");
    SweepResult result;
    for (std::size_t k = 0; k < cfg_.lambda_grid.size(); ++k) {
        const double lambda = cfg_.lambda_grid[k];
        SweepEntry entry;
        entry.lambda = lambda;
        try {
            TrainResult tr = train_one_lambda(lambda, derive_seed(cfg_.seed, "sweep", k));
            ValMetrics vm = validate(tr.policy);
            entry.policy = std::move(tr.policy);
            entry.val_utility = vm.utility;
            entry.val_disparity_sq = vm.disparity_sq;
        } catch (const std::exception& e) {
            entry.failed = true;
            entry.error = e.what();
        }
        result.entries.push_back(std::move(entry));
    }

    // Pick max utility among constraint-satisfying policies; if none satisfy,
    // fall back to the minimal-disparity policy.
    double best_util = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < result.entries.size(); ++k) {
        const auto& e = result.entries[k];
        if (e.failed || e.val_disparity_sq > cfg_.delta) continue;
        if (e.val_utility > best_util) {
            best_util = e.val_utility;
            result.selected = static_cast<int>(k);
            result.constraint_satisfied = true;
        }
    }
    if (result.selected < 0) {
        double best_disp = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < result.entries.size(); ++k) {
            const auto& e = result.entries[k];
            if (e.failed) continue;
            if (e.val_disparity_sq < best_disp) {
                best_disp = e.val_disparity_sq;
                result.selected = static_cast<int>(k);
            }
        }
    }
    return result;
}

void save_trace_csv(const std::vector<EpochMetrics>& trace,
                    const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write trace: " + path);
    os << "lambda,epoch,train_obj,val_dcg,val_disparity_sq,gamma\n";
    for (const auto& row : trace)
        os << row.lambda << ',' << row.epoch << ',' << row.train_obj << ','
           << row.val_dcg << ',' << row.val_disparity_sq << ',' << row.gamma
           << "\n";
}

void save_sweep_json(const SweepResult& result, const std::string& path) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : result.entries)
        entries.push_back({{"lambda", e.lambda},
                           {"val_utility", e.val_utility},
                           {"val_disparity_sq", e.val_disparity_sq},
                           {"failed", e.failed},
                           {"error", e.error}});
    nlohmann::json j{{"entries", entries},
                     {"selected", result.selected},
                     {"constraint_satisfied", result.constraint_satisfied}};
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write sweep result: " + path);
    os << j.dump(2) << "\n";
}

}  // namespace fairltr
