#include "fairltr/eval.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fairltr/estimators.hpp"
#include "fairltr/rng.hpp"

namespace fairltr {
namespace eval {

EvalReport evaluate(const Scorer& policy, const std::vector<Query>& test,
                    const ExaminationModel& exam, Mode mode, int samples,
                    std::uint64_t seed) {
    if (test.empty()) throw std::domain_error("empty test split");
    int G = 0;
    for (const auto& q : test)
        for (const auto& item : q.items) G = std::max(G, item.group + 1);

    EvalReport report;
    report.query_count = static_cast<int>(test.size());
    report.group_exposure.assign(G, 0.0);
    report.group_merit.assign(G, 0.0);
    std::vector<std::vector<double>> pair_disp(G, std::vector<double>(G, 0.0));

    std::vector<double> expo(G);
    for (std::size_t qi = 0; qi < test.size(); ++qi) {
        const Query& q = test[qi];
        std::vector<double> scores = policy.scores(q);
        std::vector<int> rel(q.size());
        for (int d = 0; d < q.size(); ++d) rel[d] = q.items[d].relevance;

        std::fill(expo.begin(), expo.end(), 0.0);
        double dcg = 0.0, avg_rank = 0.0;
        if (mode == Mode::Argmax) {
            Ranking sigma = pl::argmax_ranking(scores);
            dcg = est::delta_true(sigma, rel, Metric::Dcg);
            avg_rank = est::delta_true(sigma, rel, Metric::AvgRank);
            for (int d = 0; d < q.size(); ++d)
                expo[q.items[d].group] += exam.examine_prob(sigma.rank(d));
        } else {
            Rng rng(derive_seed(seed, "eval", qi));
            for (int s = 0; s < samples; ++s) {
                Ranking sigma = pl::sample(scores, rng).sigma;
                dcg += est::delta_true(sigma, rel, Metric::Dcg);
                avg_rank += est::delta_true(sigma, rel, Metric::AvgRank);
                for (int d = 0; d < q.size(); ++d)
                    expo[q.items[d].group] += exam.examine_prob(sigma.rank(d));
            }
            dcg /= samples;
            avg_rank /= samples;
            for (auto& e : expo) e /= samples;
        }
        report.avg_dcg += dcg;
        report.avg_rank += avg_rank;

        std::vector<double> merit(G, 0.0);
        for (const auto& item : q.items) merit[item.group] += item.relevance;
        for (int g = 0; g < G; ++g) {
            report.group_exposure[g] += expo[g];
            report.group_merit[g] += merit[g];
        }
        for (int i = 0; i < G; ++i)
            for (int j = i + 1; j < G; ++j)
                pair_disp[i][j] += merit[j] * expo[i] - merit[i] * expo[j];
    }

    const double inv = 1.0 / report.query_count;
    report.avg_dcg *= inv;
    report.avg_rank *= inv;
    for (int i = 0; i < G; ++i)
        for (int j = i + 1; j < G; ++j) {
            PairReport pr;
            pr.group_i = i;
            pr.group_j = j;
            pr.disparity = pair_disp[i][j] * inv;
            pr.disparity_sq = pr.disparity * pr.disparity;
            report.total_disparity_sq += pr.disparity_sq;
            report.pairs.push_back(pr);
        }
    return report;
}

std::vector<FrontierRow> frontier(const SweepResult& sweep,
                                  const std::vector<Query>& test,
                                  const ExaminationModel& exam) {
    std::vector<FrontierRow> rows;
    for (const auto& entry : sweep.entries) {
        if (entry.failed) continue;
        EvalReport rep = evaluate(entry.policy, test, exam, Mode::Argmax);
        rows.push_back({entry.lambda, rep.avg_dcg, rep.total_disparity_sq});
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    return rows;
}

void save_frontier_csv(const std::vector<FrontierRow>& rows,
                       const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write frontier: " + path);
    os << "lambda,test_dcg,test_disparity_sq\n";
    for (const auto& r : rows)
        os << r.lambda << ',' << r.test_dcg << ',' << r.test_disparity_sq << "\n";
}

void save_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs)
        pairs.push_back({{"i", p.group_i},
                         {"j", p.group_j},
                         {"disparity", p.disparity},
                         {"disparity_sq", p.disparity_sq}});
    nlohmann::json j{{"avg_dcg", report.avg_dcg},
                     {"avg_rank", report.avg_rank},
                     {"pairs", pairs},
                     {"total_disparity_sq", report.total_disparity_sq},
                     {"group_exposure", report.group_exposure},
                     {"group_merit", report.group_merit},
                     {"query_count", report.query_count}};
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write eval report: " + path);
    os << j.dump(2) << "\n";
}

}  // namespace eval
}  // namespace fairltr
