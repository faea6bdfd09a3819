#ifndef FAIRLTR_ESTIMATORS_HPP
#define FAIRLTR_ESTIMATORS_HPP

#include <span>
#include <string>
#include <vector>

#include "fairltr/exam_model.hpp"
#include "fairltr/types.hpp"

namespace fairltr {

// One logged impression: the presented ranking, realized clicks, and the
// examination propensities recorded at logging time.
struct ClickRecord {
    std::string qid;
    int query_index = -1;  // index into the split the log was generated from
    Ranking logged_ranking;
    std::vector<std::uint8_t> clicks;
    std::vector<double> propensities;

    int size() const { return static_cast<int>(clicks.size()); }
};

enum class Metric { Dcg, AvgRank };

// Rank weighting f(k): DCG uses 1/log2(1+k), AvgRank uses -k.
double metric_weight(Metric m, int rank);

enum class EstimatorKind { True, Ips, NaiveRatio, Amortized, NoiseCorrected };

struct DisparityEstimate {
    double value = 0.0;
    int group_i = 0;
    int group_j = 0;
    EstimatorKind kind = EstimatorKind::True;
};

namespace est {

// Additive metric Delta(sigma, rel) = sum_d f(sigma(d)) * rel_d.
double delta_true(const Ranking& sigma, std::span<const int> rel, Metric m);

// IPS utility estimate of Delta for a new ranking from one click record.
double delta_ips(const Ranking& sigma, const ClickRecord& record, Metric m);

// Per-item exposure of a deterministic ranking: d -> v_{sigma(d)}.
std::vector<double> exposure_of_ranking(const Ranking& sigma,
                                        const ExaminationModel& exam);

// Group exposure of a deterministic ranking.
double group_exposure(const Ranking& sigma, std::span<const int> groups,
                      int group, const ExaminationModel& exam);

// Group exposure of a stochastic policy given sampled rankings (Monte-Carlo
// mean); exact when the samples are an enumeration with weights.
double group_exposure_mc(std::span<const Ranking> samples,
                         std::span<const int> groups, int group,
                         const ExaminationModel& exam);

double merit_true(const Query& q, int group);
// IPS merit estimate: sum over group members of c_d / p_d.
double merit_ips(const ClickRecord& record, std::span<const int> groups, int group);

// D_hat_ij = M_hat_j * Expo_i - M_hat_i * Expo_j.
DisparityEstimate disparity_ips(const ClickRecord& record,
                                std::span<const int> groups, int i, int j,
                                double exposure_i, double exposure_j);

DisparityEstimate disparity_true(const Query& q, int i, int j, double exposure_i,
                                 double exposure_j);

// Naive ratio estimator Expo_i/M_hat_i - Expo_j/M_hat_j (biased comparator).
// Throws if either estimated merit is zero.
DisparityEstimate disparity_naive_ratio(const ClickRecord& record,
                                        std::span<const int> groups, int i, int j,
                                        double exposure_i, double exposure_j);

// Amortized estimator over a dataset: ratio of summed exposures to summed
// IPS merits. exposures[k] = {Expo_i, Expo_j} for record k.
DisparityEstimate disparity_amortized(
    std::span<const ClickRecord> records,
    std::span<const std::vector<int>> groups_per_record, int i, int j,
    std::span<const std::pair<double, double>> exposures);

// Noise-corrected estimator: D_hat_ips - eps_minus * (|G_j| Expo_i - |G_i| Expo_j).
DisparityEstimate disparity_noise_corrected(const ClickRecord& record,
                                            std::span<const int> groups, int i,
                                            int j, double exposure_i,
                                            double exposure_j, double eps_minus);

}  // namespace est

}  // namespace fairltr

#endif
