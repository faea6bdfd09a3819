#include "fairltr/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace fairltr {

double metric_weight(Metric m, int rank) {
    switch (m) {
        case Metric::Dcg:
            return 1.0 / std::log2(1.0 + rank);
        case Metric::AvgRank:
            return -static_cast<double>(rank);
    }
    throw std::logic_error("unknown metric");
}

namespace est {

double delta_true(const Ranking& sigma, std::span<const int> rel, Metric m) {
    double sum = 0.0;
    for (std::size_t d = 0; d < rel.size(); ++d)
        if (rel[d]) sum += metric_weight(m, sigma.rank(static_cast<int>(d)));
    return sum;
}

double delta_ips(const Ranking& sigma, const ClickRecord& record, Metric m) {
    double sum = 0.0;
    for (int d = 0; d < record.size(); ++d) {
        if (!record.clicks[d]) continue;
        double p = record.propensities[d];
        if (p <= 0.0) throw std::domain_error("zero propensity in click record");
        sum += metric_weight(m, sigma.rank(d)) / p;
    }
    return sum;
}

std::vector<double> exposure_of_ranking(const Ranking& sigma,
                                        const ExaminationModel& exam) {
    std::vector<double> out(sigma.size());
    for (int d = 0; d < sigma.size(); ++d)
        out[d] = exam.examine_prob(sigma.rank(d));
    return out;
}

double group_exposure(const Ranking& sigma, std::span<const int> groups,
                      int group, const ExaminationModel& exam) {
    double sum = 0.0;
    for (int d = 0; d < sigma.size(); ++d)
        if (groups[d] == group) sum += exam.examine_prob(sigma.rank(d));
    return sum;
}

double group_exposure_mc(std::span<const Ranking> samples,
                         std::span<const int> groups, int group,
                         const ExaminationModel& exam) {
    if (samples.empty()) throw std::invalid_argument("no ranking samples");
    double sum = 0.0;
    for (const auto& sigma : samples)
        sum += group_exposure(sigma, groups, group, exam);
    return sum / static_cast<double>(samples.size());
}

double merit_true(const Query& q, int group) {
    double m = 0.0;
    for (const auto& item : q.items)
        if (item.group == group) m += item.relevance;
    return m;
}

double merit_ips(const ClickRecord& record, std::span<const int> groups,
                 int group) {
    double m = 0.0;
    for (int d = 0; d < record.size(); ++d) {
        if (groups[d] != group || !record.clicks[d]) continue;
        double p = record.propensities[d];
        if (p <= 0.0) throw std::domain_error("zero propensity in click record");
        m += 1.0 / p;
    }
    return m;
}

DisparityEstimate disparity_ips(const ClickRecord& record,
                                std::span<const int> groups, int i, int j,
                                double exposure_i, double exposure_j) {
    double mi = merit_ips(record, groups, i);
    double mj = merit_ips(record, groups, j);
    return {mj * exposure_i - mi * exposure_j, i, j, EstimatorKind::Ips};
}

DisparityEstimate disparity_true(const Query& q, int i, int j, double exposure_i,
                                 double exposure_j) {
    double mi = merit_true(q, i);
    double mj = merit_true(q, j);
    return {mj * exposure_i - mi * exposure_j, i, j, EstimatorKind::True};
}

DisparityEstimate disparity_naive_ratio(const ClickRecord& record,
                                        std::span<const int> groups, int i, int j,
                                        double exposure_i, double exposure_j) {
    double mi = merit_ips(record, groups, i);
    double mj = merit_ips(record, groups, j);
    if (mi == 0.0 || mj == 0.0)
        throw std::domain_error("naive ratio disparity undefined: zero estimated merit");
    return {exposure_i / mi - exposure_j / mj, i, j, EstimatorKind::NaiveRatio};
}

DisparityEstimate disparity_amortized(
    std::span<const ClickRecord> records,
    std::span<const std::vector<int>> groups_per_record, int i, int j,
    std::span<const std::pair<double, double>> exposures) {
    if (records.size() != groups_per_record.size() ||
        records.size() != exposures.size())
        throw std::invalid_argument("amortized disparity: input size mismatch");
    double expo_i = 0.0, expo_j = 0.0, mi = 0.0, mj = 0.0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        expo_i += exposures[k].first;
        expo_j += exposures[k].second;
        mi += merit_ips(records[k], groups_per_record[k], i);
        mj += merit_ips(records[k], groups_per_record[k], j);
    }
    if (mi == 0.0 || mj == 0.0)
        throw std::domain_error("amortized disparity undefined: zero summed merit");
    return {expo_i / mi - expo_j / mj, i, j, EstimatorKind::Amortized};
}

DisparityEstimate disparity_noise_corrected(const ClickRecord& record,
                                            std::span<const int> groups, int i,
                                            int j, double exposure_i,
                                            double exposure_j, double eps_minus) {
    auto ips = disparity_ips(record, groups, i, j, exposure_i, exposure_j);
    double size_i = 0.0, size_j = 0.0;
    for (int g : groups) {
        if (g == i) size_i += 1.0;
        if (g == j) size_j += 1.0;
    }
    double corrected =
        ips.value - eps_minus * (size_j * exposure_i - size_i * exposure_j);
    return {corrected, i, j, EstimatorKind::NoiseCorrected};
}

}  // namespace est
}  // namespace fairltr
