#ifndef FAIRLTR_CLICKSIM_HPP
#define FAIRLTR_CLICKSIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairltr/estimators.hpp"
#include "fairltr/exam_model.hpp"
#include "fairltr/policy.hpp"
#include "fairltr/types.hpp"

namespace fairltr {
namespace clicksim {

// Weak logging policy: least-squares regression of relevance on features,
// fit on a sampled fraction of the training queries. Falls back to zero
// weights when the sample is degenerate (all labels identical).
Scorer train_logging_policy(const std::vector<Query>& train, double fraction,
                            std::uint64_t seed);

// Simulates impressions of the logging policy's deterministic ranking under
// the position-based examination model. One ClickRecord per impression.
// record_eta, when set, records propensities under a different (misspecified)
// position-bias severity than the one driving the simulation.
std::vector<ClickRecord> simulate_clicks(const std::vector<Query>& queries,
                                         const Scorer& logging_policy,
                                         const ExaminationModel& exam,
                                         int impressions_per_query,
                                         std::uint64_t seed,
                                         std::optional<double> record_eta = {});

// Planted-irrelevant-item intervention: on a fraction of impressions, a known
// irrelevant item replaces the item at position k; the observed clickthrough
// rate at that position divided by v_k estimates eps_minus.
double estimate_eps_minus(const std::vector<Query>& queries,
                          const Scorer& logging_policy,
                          const ExaminationModel& exam, int planted_position,
                          double intervention_fraction,
                          int impressions_per_query, std::uint64_t seed);

void save_click_log(const std::vector<ClickRecord>& records,
                    const std::string& path);
std::vector<ClickRecord> load_click_log(const std::string& path);

}  // namespace clicksim
}  // namespace fairltr

#endif
