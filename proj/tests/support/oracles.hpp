// Independent enumeration oracles for the estimator and gradient tests.
// Everything here computes expectations by brute force and stays off the
// implementation paths it is used to check.
#ifndef FAIRLTR_TESTS_ORACLES_HPP
#define FAIRLTR_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "fairltr/estimators.hpp"
#include "fairltr/exam_model.hpp"
#include "fairltr/types.hpp"

namespace oracles {

// Enumerates all 2^n examination vectors of the logged ranking and feeds the
// induced click vector (click iff examined, with P(click|examined) = eps_plus
// for relevant and eps_minus for irrelevant items treated as a further
// independent bit) to `fn`, weighted by the outcome probability.
//
// With eps_plus=1, eps_minus=0 this reduces to the noise-free enumeration over
// examinations only.
inline double expect_over_clicks(
    const fairltr::Ranking& logged, std::span<const int> rel,
    const fairltr::ExaminationModel& exam,
    const std::function<double(const std::vector<std::uint8_t>&)>& fn) {
    const int n = static_cast<int>(rel.size());
    // Per-item marginal click probability; clicks are independent across items.
    std::vector<double> p_click(n);
    for (int d = 0; d < n; ++d) {
        double v = exam.examine_prob(logged.rank(d));
        p_click[d] = v * (rel[d] ? exam.eps_plus : exam.eps_minus);
    }
    double total = 0.0;
    std::vector<std::uint8_t> clicks(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double prob = 1.0;
        for (int d = 0; d < n; ++d) {
            bool c = (mask >> d) & 1u;
            clicks[d] = c;
            prob *= c ? p_click[d] : 1.0 - p_click[d];
        }
        if (prob > 0.0) total += prob * fn(clicks);
    }
    return total;
}

// Variant that skips outcomes where `defined` is false and renormalizes
// (conditional expectation), for estimators that are undefined on some
// click vectors.
inline double expect_over_clicks_conditional(
    const fairltr::Ranking& logged, std::span<const int> rel,
    const fairltr::ExaminationModel& exam,
    const std::function<bool(const std::vector<std::uint8_t>&)>& defined,
    const std::function<double(const std::vector<std::uint8_t>&)>& fn) {
    const int n = static_cast<int>(rel.size());
    std::vector<double> p_click(n);
    for (int d = 0; d < n; ++d) {
        double v = exam.examine_prob(logged.rank(d));
        p_click[d] = v * (rel[d] ? exam.eps_plus : exam.eps_minus);
    }
    double total = 0.0, mass = 0.0;
    std::vector<std::uint8_t> clicks(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double prob = 1.0;
        for (int d = 0; d < n; ++d) {
            bool c = (mask >> d) & 1u;
            clicks[d] = c;
            prob *= c ? p_click[d] : 1.0 - p_click[d];
        }
        if (prob == 0.0 || !defined(clicks)) continue;
        mass += prob;
        total += prob * fn(clicks);
    }
    return total / mass;
}

// All n! rankings.
inline std::vector<fairltr::Ranking> all_rankings(int n) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<fairltr::Ranking> out;
    do {
        out.push_back(fairltr::Ranking::from_order(order));
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
}

// Plackett-Luce probability computed directly from the product-of-softmax
// definition, without stabilization (independent of pl::log_prob).
inline double pl_prob_direct(std::span<const double> scores,
                             const fairltr::Ranking& sigma) {
    auto order = sigma.order();
    const int n = static_cast<int>(order.size());
    double prob = 1.0;
    for (int i = 0; i < n; ++i) {
        double denom = 0.0;
        for (int j = i; j < n; ++j) denom += std::exp(scores[order[j]]);
        prob *= std::exp(scores[order[i]]) / denom;
    }
    return prob;
}

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_difference(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> params, double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double orig = params[i];
        params[i] = orig + h;
        double fp = f(params);
        params[i] = orig - h;
        double fm = f(params);
        params[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Relative tolerance comparison with an absolute floor for near-zero entries.
inline bool grads_close(std::span<const double> a, std::span<const double> b,
                        double rel_tol, double abs_floor = 1e-8) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({std::abs(a[i]), std::abs(b[i]), abs_floor / rel_tol});
        if (std::abs(a[i] - b[i]) / denom > rel_tol) return false;
    }
    return true;
}

}  // namespace oracles

#endif
