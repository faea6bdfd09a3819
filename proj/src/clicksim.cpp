#include "fairltr/clicksim.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "fairltr/rng.hpp"

namespace fairltr {
namespace clicksim {

using nlohmann::json;

namespace {

// Solves (A + ridge*I) w = b in place via Cholesky; A is symmetric positive
// semi-definite (normal equations).
std::vector<double> solve_ridge(std::vector<double> A, std::vector<double> b,
                                int n, double ridge) {
    for (int i = 0; i < n; ++i) A[i * n + i] += ridge;
    // Cholesky A = L L^T
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A[i * n + j];
            for (int k = 0; k < j; ++k) s -= A[i * n + k] * A[j * n + k];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("normal equations not SPD");
                A[i * n + j] = std::sqrt(s);
            } else {
                A[i * n + j] = s / A[j * n + j];
            }
        }
    }
    // forward then backward substitution
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= A[i * n + k] * b[k];
        b[i] = s / A[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= A[k * n + i] * b[k];
        b[i] = s / A[i * n + i];
    }
    return b;
}

}  // namespace

Scorer train_logging_policy(const std::vector<Query>& train, double fraction,
                            std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::domain_error("logging fraction must be in (0,1]");
    if (train.empty()) throw std::domain_error("empty training split");
    const int F = static_cast<int>(train.front().items.front().features.size());

    std::vector<int> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "logging_policy"));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(fraction * train.size()));
    idx.resize(take);

    std::vector<double> xtx(static_cast<std::size_t>(F) * F, 0.0), xty(F, 0.0);
    int pos = 0, total = 0;
    for (int qi : idx)
        for (const auto& item : train[qi].items) {
            ++total;
            pos += item.relevance;
            for (int a = 0; a < F; ++a) {
                xty[a] += item.features[a] * item.relevance;
                for (int b = 0; b <= a; ++b)
                    xtx[a * F + b] += item.features[a] * item.features[b];
            }
        }
    if (pos == 0 || pos == total) {
        std::cerr << "warning: degenerate logging sample (all labels identical), "
                     "falling back to zero weights\n";
        return Scorer::linear(F);
    }
    for (int a = 0; a < F; ++a)
        for (int b = a + 1; b < F; ++b) xtx[a * F + b] = xtx[b * F + a];
    return Scorer::linear(solve_ridge(std::move(xtx), std::move(xty), F, 1e-6));
}

std::vector<ClickRecord> simulate_clicks(const std::vector<Query>& queries,
                                         const Scorer& logging_policy,
                                         const ExaminationModel& exam,
                                         int impressions_per_query,
                                         std::uint64_t seed,
                                         std::optional<double> record_eta) {
    exam.validate();
    if (impressions_per_query < 1)
        throw std::domain_error("need at least one impression per query");
    const double rec_eta = record_eta.value_or(exam.eta);

    std::vector<ClickRecord> out;
    out.reserve(queries.size() * impressions_per_query);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& q = queries[qi];
        Ranking sigma = rank_by_scores(logging_policy.scores(q));
        std::vector<double> prop(q.size());
        for (int d = 0; d < q.size(); ++d)
            prop[d] = std::pow(1.0 / sigma.rank(d), rec_eta);

        for (int t = 0; t < impressions_per_query; ++t) {
            Rng rng(derive_seed(seed, "impression", qi, t));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            ClickRecord rec;
            rec.qid = q.id;
            rec.query_index = static_cast<int>(qi);
            rec.logged_ranking = sigma;
            rec.propensities = prop;
            rec.clicks.resize(q.size(), 0);
            for (int d = 0; d < q.size(); ++d) {
                bool examined = unif(rng) < exam.examine_prob(sigma.rank(d));
                if (!examined) continue;
                double p_click = q.items[d].relevance ? exam.eps_plus : exam.eps_minus;
                if (p_click > 0.0 && unif(rng) < p_click) rec.clicks[d] = 1;
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

double estimate_eps_minus(const std::vector<Query>& queries,
                          [[maybe_unused]] const Scorer& logging_policy,
                          const ExaminationModel& exam, int planted_position,
                          double intervention_fraction,
                          int impressions_per_query, std::uint64_t seed) {
    exam.validate();
    if (planted_position < 1) throw std::domain_error("planted position is 1-based");
    const double v_k = exam.examine_prob(planted_position);

    long long interventions = 0, clicks = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& q = queries[qi];
        if (planted_position > q.size()) continue;
        int planted = -1;
        for (int d = 0; d < q.size(); ++d)
            if (q.items[d].relevance == 0) {
                planted = d;
                break;
            }
        if (planted < 0) continue;  // no known-irrelevant item available

        int budget = static_cast<int>(
            std::ceil(intervention_fraction * impressions_per_query));
        for (int t = 0; t < budget; ++t) {
            Rng rng(derive_seed(seed, "intervention", qi, t));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            ++interventions;
            // the planted item replaces whatever sat at position k; only that
            // position matters for the CTR estimate
            bool examined = unif(rng) < v_k;
            if (examined && exam.eps_minus > 0.0 && unif(rng) < exam.eps_minus)
                ++clicks;
        }
    }
    if (interventions == 0)
        throw std::runtime_error("no intervention impressions were generated");
    return static_cast<double>(clicks) / static_cast<double>(interventions) / v_k;
}

void save_click_log(const std::vector<ClickRecord>& records,
                    const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write click log: " + path);
    for (const auto& rec : records) {
        json j{{"qid", rec.qid},
               {"sigma", rec.logged_ranking.rank_of},
               {"c", std::vector<int>(rec.clicks.begin(), rec.clicks.end())},
               {"p", rec.propensities}};
        os << j.dump() << "\n";
    }
}

std::vector<ClickRecord> load_click_log(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read click log: " + path);
    std::vector<ClickRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ClickRecord rec;
        rec.qid = j.at("qid").get<std::string>();
        rec.logged_ranking = Ranking(j.at("sigma").get<std::vector<int>>());
        auto c = j.at("c").get<std::vector<int>>();
        rec.clicks.assign(c.begin(), c.end());
        rec.propensities = j.at("p").get<std::vector<double>>();
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace clicksim
}  // namespace fairltr
