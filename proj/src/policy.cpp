#include "fairltr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fairltr {

Scorer Scorer::linear(int feature_count) {
    Scorer s;
    s.kind = Kind::Linear;
    s.feature_count = feature_count;
    s.params.assign(feature_count, 0.0);
    return s;
}

Scorer Scorer::linear(std::vector<double> weights) {
    Scorer s;
    s.kind = Kind::Linear;
    s.feature_count = static_cast<int>(weights.size());
    s.params = std::move(weights);
    return s;
}

Scorer Scorer::one_hidden(int feature_count, int hidden_width) {
    Scorer s;
    s.kind = Kind::OneHidden;
    s.feature_count = feature_count;
    s.hidden_width = hidden_width;
    s.params.assign(static_cast<std::size_t>(hidden_width) * feature_count +
                        2 * hidden_width + 1,
                    0.0);
    return s;
}

int Scorer::param_count() const { return static_cast<int>(params.size()); }

void Scorer::init_random(std::uint64_t seed) {
    Rng rng(seed);
    if (kind == Kind::Linear) {
        double bound = 1.0 / std::sqrt(static_cast<double>(feature_count));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& p : params) p = u(rng);
        return;
    }
    const int F = feature_count, H = hidden_width;
    double b1 = 1.0 / std::sqrt(static_cast<double>(F));
    double b2 = 1.0 / std::sqrt(static_cast<double>(H));
    std::uniform_real_distribution<double> u1(-b1, b1), u2(-b2, b2);
    std::size_t idx = 0;
    for (int i = 0; i < H * F; ++i) params[idx++] = u1(rng);
    for (int i = 0; i < H; ++i) params[idx++] = u1(rng);  // hidden bias
    for (int i = 0; i < H; ++i) params[idx++] = u2(rng);  // output weights
    params[idx++] = 0.0;                                  // output bias
}

double Scorer::score_item(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != feature_count)
        throw std::invalid_argument("feature dimension mismatch");
    if (kind == Kind::Linear) {
        double s = 0.0;
        for (int f = 0; f < feature_count; ++f) s += params[f] * x[f];
        return s;
    }
    const int F = feature_count, H = hidden_width;
    const double* W1 = params.data();
    const double* bias1 = W1 + static_cast<std::size_t>(H) * F;
    const double* w2 = bias1 + H;
    const double b2 = w2[H];
    double out = b2;
    for (int h = 0; h < H; ++h) {
        double a = bias1[h];
        const double* row = W1 + static_cast<std::size_t>(h) * F;
        for (int f = 0; f < F; ++f) a += row[f] * x[f];
        if (a > 0.0) out += w2[h] * a;
    }
    return out;
}

std::vector<double> Scorer::scores(const Query& q) const {
    std::vector<double> out(q.items.size());
    for (int d = 0; d < q.size(); ++d) out[d] = score_item(q.items[d].features);
    return out;
}

void Scorer::accumulate_param_grad(const Query& q,
                                   std::span<const double> score_grad,
                                   std::span<double> param_grad) const {
    if (score_grad.size() != q.items.size() ||
        static_cast<int>(param_grad.size()) != param_count())
        throw std::invalid_argument("gradient buffer size mismatch");
    const int F = feature_count;
    if (kind == Kind::Linear) {
        for (int d = 0; d < q.size(); ++d) {
            double g = score_grad[d];
            if (g == 0.0) continue;
            const auto& x = q.items[d].features;
            for (int f = 0; f < F; ++f) param_grad[f] += g * x[f];
        }
        return;
    }
    const int H = hidden_width;
    const double* W1 = params.data();
    const double* bias1 = W1 + static_cast<std::size_t>(H) * F;
    const double* w2 = bias1 + H;
    double* gW1 = param_grad.data();
    double* gb1 = gW1 + static_cast<std::size_t>(H) * F;
    double* gw2 = gb1 + H;
    double* gb2 = gw2 + H;
    for (int d = 0; d < q.size(); ++d) {
        double g = score_grad[d];
        if (g == 0.0) continue;
        const auto& x = q.items[d].features;
        *gb2 += g;
        for (int h = 0; h < H; ++h) {
            double a = bias1[h];
            const double* row = W1 + static_cast<std::size_t>(h) * F;
            for (int f = 0; f < F; ++f) a += row[f] * x[f];
            if (a <= 0.0) continue;
            gw2[h] += g * a;
            double gh = g * w2[h];
            gb1[h] += gh;
            double* grow = gW1 + static_cast<std::size_t>(h) * F;
            for (int f = 0; f < F; ++f) grow[f] += gh * x[f];
        }
    }
}

namespace {
constexpr char kMagic[4] = {'F', 'L', 'T', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_raw(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void Scorer::save(const std::string& path, std::uint64_t seed) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open model file for writing: " + path);
    os.write(kMagic, 4);
    write_raw(os, kVersion);
    write_raw(os, static_cast<std::uint32_t>(kind));
    write_raw(os, static_cast<std::uint32_t>(feature_count));
    write_raw(os, static_cast<std::uint32_t>(hidden_width));
    write_raw(os, seed);
    write_raw(os, static_cast<std::uint64_t>(params.size()));
    os.write(reinterpret_cast<const char*>(params.data()),
             static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (!os) throw std::runtime_error("model write failed: " + path);

    nlohmann::json meta{{"kind", kind == Kind::Linear ? "linear" : "mlp"},
                        {"feature_count", feature_count},
                        {"hidden_width", hidden_width},
                        {"seed", seed},
                        {"version", kVersion}};
    std::ofstream ms(path + ".json");
    ms << meta.dump(2) << "\n";
}

Scorer Scorer::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad model file magic: " + path);
    std::uint32_t version, kind_u, fc, hw;
    std::uint64_t seed, count;
    read_raw(is, version);
    if (version != kVersion) throw std::runtime_error("unsupported model version");
    read_raw(is, kind_u);
    read_raw(is, fc);
    read_raw(is, hw);
    read_raw(is, seed);
    read_raw(is, count);
    Scorer s;
    s.kind = static_cast<Kind>(kind_u);
    s.feature_count = static_cast<int>(fc);
    s.hidden_width = static_cast<int>(hw);
    s.params.resize(count);
    is.read(reinterpret_cast<char*>(s.params.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw std::runtime_error("truncated model file: " + path);
    return s;
}

namespace pl {

double log_prob(std::span<const double> scores, const Ranking& sigma) {
    const int n = static_cast<int>(scores.size());
    auto order = sigma.order();
    double lp = 0.0;
    // remaining[i..] holds items not yet placed
    std::vector<int> remaining(order);
    for (int i = 0; i < n - 1; ++i) {
        double mx = scores[remaining[i]];
        for (int j = i; j < n; ++j) mx = std::max(mx, scores[remaining[j]]);
        double denom = 0.0;
        for (int j = i; j < n; ++j) denom += std::exp(scores[remaining[j]] - mx);
        lp += (scores[remaining[i]] - mx) - std::log(denom);
    }
    return lp;
}

RankingSample sample(std::span<const double> scores, Rng& rng) {
    const int n = static_cast<int>(scores.size());
    std::vector<int> remaining(n);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<int> order;
    order.reserve(n);
    double lp = 0.0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const int m = n - i;
        double mx = scores[remaining[0]];
        for (int j = 1; j < m; ++j) mx = std::max(mx, scores[remaining[j]]);
        double denom = 0.0;
        std::vector<double> w(m);
        for (int j = 0; j < m; ++j) {
            w[j] = std::exp(scores[remaining[j]] - mx);
            denom += w[j];
        }
        int pick = m - 1;
        if (m > 1) {
            double u = unif(rng) * denom, acc = 0.0;
            for (int j = 0; j < m; ++j) {
                acc += w[j];
                if (u <= acc) {
                    pick = j;
                    break;
                }
            }
        }
        lp += std::log(w[pick] / denom);
        order.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + pick);
    }
    return {Ranking::from_order(order), lp};
}

std::vector<double> grad_log_prob_scores(std::span<const double> scores,
                                         const Ranking& sigma) {
    const int n = static_cast<int>(scores.size());
    auto order = sigma.order();
    std::vector<double> grad(n, 0.0);
    for (int i = 0; i < n - 1; ++i) {
        double mx = scores[order[i]];
        for (int j = i; j < n; ++j) mx = std::max(mx, scores[order[j]]);
        double denom = 0.0;
        for (int j = i; j < n; ++j) denom += std::exp(scores[order[j]] - mx);
        for (int j = i; j < n; ++j) {
            double p = std::exp(scores[order[j]] - mx) / denom;
            grad[order[j]] -= p;
        }
        grad[order[i]] += 1.0;
    }
    return grad;
}

Ranking argmax_ranking(std::span<const double> scores) {
    return rank_by_scores(scores);
}

namespace {
std::vector<double> softmax(std::span<const double> scores) {
    double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - mx);
        denom += p[i];
    }
    for (auto& v : p) v /= denom;
    return p;
}
}  // namespace

double entropy(std::span<const double> scores) {
    auto p = softmax(scores);
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

std::vector<double> entropy_grad_scores(std::span<const double> scores) {
    auto p = softmax(scores);
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        grad[i] = p[i] > 0.0 ? -p[i] * (std::log(p[i]) + h) : 0.0;
    return grad;
}

std::vector<std::pair<Ranking, double>> enumerate(std::span<const double> scores) {
    const int n = static_cast<int>(scores.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::pair<Ranking, double>> out;
    do {
        Ranking r = Ranking::from_order(order);
        out.emplace_back(r, std::exp(log_prob(scores, r)));
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
}

}  // namespace pl

double log_prob(const Scorer& s, const Query& q, const Ranking& sigma) {
    return pl::log_prob(s.scores(q), sigma);
}

RankingSample sample(const Scorer& s, const Query& q, Rng& rng) {
    return pl::sample(s.scores(q), rng);
}

Ranking argmax_ranking(const Scorer& s, const Query& q) {
    return pl::argmax_ranking(s.scores(q));
}

double entropy(const Scorer& s, const Query& q) {
    return pl::entropy(s.scores(q));
}

}  // namespace fairltr
