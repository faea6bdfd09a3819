#ifndef FAIRLTR_EXAM_MODEL_HPP
#define FAIRLTR_EXAM_MODEL_HPP

#include <cmath>
#include <stdexcept>

namespace fairltr {

// Position-based examination model: the probability of examining the item at
// (1-based) rank k is v_k = (1/k)^eta. eps_plus / eps_minus are the click
// probabilities for examined relevant / irrelevant items.
struct ExaminationModel {
    double eta = 1.0;
    double eps_plus = 1.0;
    double eps_minus = 0.0;

    double examine_prob(int rank) const { return std::pow(1.0 / rank, eta); }

    void validate() const {
        if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
        if (!(eps_plus > 0.0 && eps_plus <= 1.0))
            throw std::invalid_argument("eps_plus must be in (0,1]");
        if (!(eps_minus >= 0.0 && eps_minus < 1.0))
            throw std::invalid_argument("eps_minus must be in [0,1)");
        if (!(eps_plus > eps_minus))
            throw std::invalid_argument("eps_plus must exceed eps_minus");
    }
};

}  // namespace fairltr

#endif
