#ifndef FAIRLTR_POLICY_HPP
#define FAIRLTR_POLICY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairltr/rng.hpp"
#include "fairltr/types.hpp"

namespace fairltr {

// Pointwise scoring function h_theta: the score of an item depends only on its
// own feature vector. Parameters are stored flat; layout for OneHidden is
// [W1 (H x F, row-major), b1 (H), w2 (H), b2].
struct Scorer {
    enum class Kind { Linear, OneHidden };

    Kind kind = Kind::Linear;
    int feature_count = 0;
    int hidden_width = 0;
    std::vector<double> params;

    static Scorer linear(int feature_count);
    static Scorer linear(std::vector<double> weights);
    static Scorer one_hidden(int feature_count, int hidden_width);

    int param_count() const;

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
    void init_random(std::uint64_t seed);

    double score_item(std::span<const double> x) const;
    std::vector<double> scores(const Query& q) const;

    // Accumulates d(objective)/d(params) into param_grad given the gradient of
    // the objective w.r.t. the per-item scores. param_grad must have
    // param_count() entries.
    void accumulate_param_grad(const Query& q, std::span<const double> score_grad,
                               std::span<double> param_grad) const;

    void save(const std::string& path, std::uint64_t seed = 0) const;
    static Scorer load(const std::string& path);
};

struct RankingSample {
    Ranking sigma;
    double log_prob = 0.0;
};

// Plackett-Luce distribution over rankings induced by a score vector.
// All functions are numerically stabilized by max-subtraction per placement.
namespace pl {

double log_prob(std::span<const double> scores, const Ranking& sigma);
RankingSample sample(std::span<const double> scores, Rng& rng);

// Gradient of log pi(sigma) w.r.t. the score vector.
std::vector<double> grad_log_prob_scores(std::span<const double> scores,
                                         const Ranking& sigma);

// Mode of the distribution: stable descending sort by score.
Ranking argmax_ranking(std::span<const double> scores);

// Shannon entropy of the top-level softmax over items, and its score gradient.
double entropy(std::span<const double> scores);
std::vector<double> entropy_grad_scores(std::span<const double> scores);

// All n! rankings with their PL probabilities. Intended for small n only
// (oracles and exact-expectation paths).
std::vector<std::pair<Ranking, double>> enumerate(std::span<const double> scores);

}  // namespace pl

// Convenience wrappers over a scorer + query.
double log_prob(const Scorer& s, const Query& q, const Ranking& sigma);
RankingSample sample(const Scorer& s, const Query& q, Rng& rng);
Ranking argmax_ranking(const Scorer& s, const Query& q);
double entropy(const Scorer& s, const Query& q);

}  // namespace fairltr

#endif
