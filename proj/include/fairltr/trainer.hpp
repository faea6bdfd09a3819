#ifndef FAIRLTR_TRAINER_HPP
#define FAIRLTR_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairltr/estimators.hpp"
#include "fairltr/exam_model.hpp"
#include "fairltr/policy.hpp"
#include "fairltr/types.hpp"

namespace fairltr {

enum class Ablation { FullIps, NoIps, UtilityIpsOnly };
enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    std::vector<double> lambda_grid{0.0, 0.1, 1.0, 10.0, 100.0, 1000.0};
    double delta = 0.0;
    int mc_samples = 32;
    double learning_rate = 0.001;
    double l2_coeff = 0.0;
    double entropy_gamma_init = 1.0;
    double gamma_decay_factor = 3.0;
    int plateau_patience = 3;
    int running_window = 100;
    int epochs = 20;
    int batch_size = 1;
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::FullIps;
    bool group_blind = false;
    std::optional<double> noise_eps_minus;
    bool full_info = false;
    Scorer::Kind model = Scorer::Kind::Linear;
    int hidden_width = 64;
    // Adam for the MLP, plain SGD for the linear model.
    OptimizerKind optimizer_for_model() const {
        return model == Scorer::Kind::Linear ? OptimizerKind::Sgd
                                             : OptimizerKind::Adam;
    }
    Metric metric = Metric::Dcg;
    // When set, per-query expectations over rankings are enumerated exactly
    // instead of Monte-Carlo sampled (small n only; used by tests).
    bool exact_enumeration = false;
};

// Ring buffer holding the last `capacity` per-query disparity estimates.
struct RunningMean {
    explicit RunningMean(int capacity = 100) : cap(capacity) {}
    void push(double v) {
        if (static_cast<int>(buf.size()) < cap) {
            buf.push_back(v);
        } else {
            buf[head] = v;
            head = (head + 1) % cap;
        }
        sum_dirty = true;
    }
    double mean() const {
        if (buf.empty()) return 0.0;
        if (sum_dirty) {
            double s = 0.0;
            for (double v : buf) s += v;
            cached = s / static_cast<double>(buf.size());
            sum_dirty = false;
        }
        return cached;
    }
    int size() const { return static_cast<int>(buf.size()); }

    std::vector<double> buf;
    int cap;
    int head = 0;

  private:
    mutable double cached = 0.0;
    mutable bool sum_dirty = true;
};

struct TrainState {
    std::vector<RunningMean> pair_disparity;  // one per unordered group pair i<j
    double gamma = 1.0;
    Rng rng{0};
    // Adam moments
    std::vector<double> adam_m, adam_v;
    long long adam_t = 0;
    // batch accumulation
    std::vector<double> batch_grad;
    int batch_fill = 0;
    long long step_count = 0;
    double epoch_reward_sum = 0.0;
    long long epoch_reward_count = 0;
};

struct EpochMetrics {
    double lambda = 0.0;
    int epoch = 0;
    double train_obj = 0.0;
    double val_dcg = 0.0;           // IPS-estimated DCG on validation clicks
    double val_disparity_sq = 0.0;  // summed squared pair disparity estimates
    double gamma = 0.0;
};

struct TrainResult {
    Scorer policy;
    std::vector<EpochMetrics> trace;
    double best_val_objective = 0.0;
};

struct SweepEntry {
    double lambda = 0.0;
    Scorer policy;
    double val_utility = 0.0;
    double val_disparity_sq = 0.0;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    int selected = -1;
    bool constraint_satisfied = false;
};

// Sum of squared pairwise disparities, one term per unordered pair.
double multi_group_objective(std::span<const double> pair_disparities);

class Trainer {
  public:
    Trainer(const DatasetSplit& data, std::vector<ClickRecord> train_logs,
            std::vector<ClickRecord> val_logs, TrainConfig config,
            ExaminationModel exam);

    // One policy-gradient step on a single click record.
    void step(Scorer& policy, const ClickRecord& record, double lambda,
              TrainState& state) const;

    TrainState make_state(std::uint64_t run_seed) const;

    TrainResult train_one_lambda(double lambda);
    TrainResult train_one_lambda(double lambda, std::uint64_t run_seed);
    SweepResult sweep();

    // Validation objective U_hat - lambda * sum_pairs D_hat^2 under argmax
    // rankings; also reports the components.
    struct ValMetrics {
        double utility = 0.0;
        double disparity_sq = 0.0;
        double objective(double lambda) const {
            return utility - lambda * disparity_sq;
        }
    };
    ValMetrics validate(const Scorer& policy) const;

    const std::vector<ClickRecord>& train_records() const { return train_logs_; }
    const std::vector<std::pair<int, int>>& group_pairs() const { return pairs_; }
    const DatasetSplit& data() const { return data_; }

  private:
    struct RecordCache {
        std::vector<double> merit_hat;       // per group, disparity convention
        std::vector<double> group_size;      // |G_g^q|
        std::vector<std::pair<int, double>> clicked;  // (item, 1/p) utility weights
    };

    RecordCache make_cache(const ClickRecord& rec, const Query& q) const;
    void resolve_indices(std::vector<ClickRecord>& records) const;
    void apply_update(Scorer& policy, std::span<const double> ascent_grad,
                      TrainState& state) const;

    DatasetSplit data_;
    std::vector<ClickRecord> train_logs_;
    std::vector<ClickRecord> val_logs_;
    TrainConfig cfg_;
    ExaminationModel exam_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<RecordCache> train_cache_;
    std::vector<RecordCache> val_cache_;
};

void save_trace_csv(const std::vector<EpochMetrics>& trace,
                    const std::string& path);
void save_sweep_json(const SweepResult& result, const std::string& path);

}  // namespace fairltr

#endif
