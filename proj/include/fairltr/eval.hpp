#ifndef FAIRLTR_EVAL_HPP
#define FAIRLTR_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fairltr/exam_model.hpp"
#include "fairltr/policy.hpp"
#include "fairltr/trainer.hpp"
#include "fairltr/types.hpp"

namespace fairltr {
namespace eval {

enum class Mode { Argmax, Stochastic };

struct PairReport {
    int group_i = 0;
    int group_j = 0;
    double disparity = 0.0;     // mean over queries of true D_ij
    double disparity_sq = 0.0;  // square of the mean
};

struct EvalReport {
    double avg_dcg = 0.0;
    double avg_rank = 0.0;
    std::vector<PairReport> pairs;
    double total_disparity_sq = 0.0;  // sum over pairs
    std::vector<double> group_exposure;  // summed over queries
    std::vector<double> group_merit;
    int query_count = 0;
};

// Full-information evaluation with true relevances and true merits.
// Argmax mode uses the highest-probability ranking per query; Stochastic
// averages utility and exposure over `samples` sampled rankings.
EvalReport evaluate(const Scorer& policy, const std::vector<Query>& test,
                    const ExaminationModel& exam, Mode mode, int samples = 32,
                    std::uint64_t seed = 0);

struct FrontierRow {
    double lambda = 0.0;
    double test_dcg = 0.0;
    double test_disparity_sq = 0.0;
};

std::vector<FrontierRow> frontier(const SweepResult& sweep,
                                  const std::vector<Query>& test,
                                  const ExaminationModel& exam);

void save_frontier_csv(const std::vector<FrontierRow>& rows,
                       const std::string& path);
void save_report_json(const EvalReport& report, const std::string& path);

}  // namespace eval
}  // namespace fairltr

#endif
