#include "fairltr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fairltr/rng.hpp"

namespace fairltr {
namespace dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<LetorRecord> parse_letor(std::istream& in) {
    std::vector<LetorRecord> records;
    std::string line;
    int line_no = 0;
    int max_fid = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // strip trailing comment
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line

        LetorRecord rec;
        try {
            std::size_t pos = 0;
            rec.grade = std::stoi(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": non-numeric relevance grade '" + tok + "'");
        }
        if (!(ls >> tok) || tok.rfind("qid:", 0) != 0)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected qid:<id>");
        rec.qid = tok.substr(4);

        while (ls >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw ParseError("line " + std::to_string(line_no) +
                                 ": malformed feature '" + tok + "'");
            int fid;
            double val;
            try {
                fid = std::stoi(tok.substr(0, colon));
                val = std::stod(tok.substr(colon + 1));
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": malformed feature '" + tok + "'");
            }
            if (fid < 1)
                throw ParseError("line " + std::to_string(line_no) +
                                 ": feature ids are 1-based");
            if (fid > static_cast<int>(rec.features.size()))
                rec.features.resize(fid, 0.0);
            rec.features[fid - 1] = val;
            max_fid = std::max(max_fid, fid);
        }
        records.push_back(std::move(rec));
    }
    for (auto& rec : records) rec.features.resize(max_fid, 0.0);
    return records;
}

std::string serialize_letor(const std::vector<LetorRecord>& records) {
    std::ostringstream os;
    for (const auto& rec : records) {
        os << rec.grade << " qid:" << rec.qid;
        for (std::size_t f = 0; f < rec.features.size(); ++f)
            if (rec.features[f] != 0.0) os << ' ' << f + 1 << ':' << rec.features[f];
        os << '\n';
    }
    return os.str();
}

int binarize(int grade) {
    if (grade < 0 || grade > 4)
        throw std::domain_error("relevance grade out of range 0..4: " +
                                std::to_string(grade));
    return grade >= 3 ? 1 : 0;
}

int group_for_value(double value, std::span<const double> thresholds) {
    int g = 0;
    for (double t : thresholds)
        if (t < value) ++g;
    return g;
}

std::vector<double> percentile_thresholds(std::vector<double> values,
                                          std::span<const double> percentiles) {
    if (values.empty()) throw std::domain_error("empty sample for percentiles");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    std::vector<double> out;
    out.reserve(percentiles.size());
    for (double p : percentiles) {
        if (p < 0.0 || p > 100.0) throw std::domain_error("percentile out of range");
        auto idx = static_cast<std::ptrdiff_t>(std::ceil(p / 100.0 * n)) - 1;
        idx = std::clamp<std::ptrdiff_t>(idx, 0, values.size() - 1);
        out.push_back(values[idx]);
    }
    if (!std::is_sorted(out.begin(), out.end()))
        throw std::domain_error("percentiles must be ascending");
    return out;
}

void assign_groups(std::vector<Query>& queries, int attribute_feature_id,
                   std::span<const double> thresholds) {
    if (thresholds.empty())
        throw std::domain_error("need at least one group threshold");
    for (std::size_t i = 0; i + 1 < thresholds.size(); ++i)
        if (!(thresholds[i] < thresholds[i + 1]))
            throw std::domain_error("thresholds must be strictly ascending");
    for (auto& q : queries)
        for (auto& item : q.items) {
            if (attribute_feature_id < 0 ||
                attribute_feature_id >= static_cast<int>(item.features.size()))
                throw std::domain_error("group attribute feature id out of range");
            item.group = group_for_value(item.features[attribute_feature_id],
                                         thresholds);
        }
}

std::vector<Query> construct_queries(const std::vector<LetorRecord>& pool,
                                     int candidates_per_query,
                                     int relevant_per_query, int query_count,
                                     std::uint64_t seed) {
    const int n = candidates_per_query, m = relevant_per_query;
    if (n <= m || m < 0)
        throw std::domain_error("need candidates_per_query > relevant_per_query >= 0");

    // Partition the pool per source query into relevant / irrelevant records.
    std::map<std::string, std::pair<std::vector<const LetorRecord*>,
                                    std::vector<const LetorRecord*>>> by_qid;
    for (const auto& rec : pool) {
        auto& bucket = by_qid[rec.qid];
        (binarize(rec.grade) ? bucket.first : bucket.second).push_back(&rec);
    }
    std::vector<const decltype(by_qid)::value_type*> eligible;
    for (const auto& entry : by_qid)
        if (static_cast<int>(entry.second.first.size()) >= m &&
            static_cast<int>(entry.second.second.size()) >= n - m)
            eligible.push_back(&entry);
    if (eligible.empty())
        throw std::runtime_error(
            "no source query has >= " + std::to_string(m) + " relevant and >= " +
            std::to_string(n - m) + " irrelevant records");

    Rng rng(derive_seed(seed, "construct_queries"));
    std::vector<Query> out;
    out.reserve(query_count);
    for (int k = 0; k < query_count; ++k) {
        const auto* src = eligible[k % eligible.size()];
        auto rel = src->second.first;
        auto irr = src->second.second;
        std::shuffle(rel.begin(), rel.end(), rng);
        std::shuffle(irr.begin(), irr.end(), rng);

        Query q;
        q.id = src->first + "#" + std::to_string(k);
        for (int i = 0; i < m; ++i)
            q.items.push_back({rel[i]->features, 1, 0});
        for (int i = 0; i < n - m; ++i)
            q.items.push_back({irr[i]->features, 0, 0});
        std::shuffle(q.items.begin(), q.items.end(), rng);
        out.push_back(std::move(q));
    }
    return out;
}

namespace {

std::vector<Query> synth_split(const SynthConfig& cfg, std::uint64_t seed,
                               const char* name) {
    Rng rng(derive_seed(seed, name));
    std::vector<double> props = cfg.group_proportion;
    if (props.empty())
        props.assign(cfg.group_count, 1.0 / cfg.group_count);
    std::discrete_distribution<int> group_dist(props.begin(), props.end());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<Query> queries;
    queries.reserve(cfg.queries_per_split);
    for (int qi = 0; qi < cfg.queries_per_split; ++qi) {
        Query q;
        q.id = std::string(name) + ":" + std::to_string(qi);
        for (int di = 0; di < cfg.items_per_query; ++di) {
            Item item;
            item.group = group_dist(rng);
            item.relevance = unif(rng) < cfg.relevance_prob[item.group] ? 1 : 0;
            item.features.resize(cfg.feature_count);
            for (int f = 0; f < cfg.signal_dims; ++f)
                item.features[f] = item.relevance * cfg.signal_scale +
                                   cfg.signal_noise_sd * noise(rng);
            item.features[cfg.signal_dims] = static_cast<double>(item.group);
            for (int f = cfg.signal_dims + 1; f < cfg.feature_count; ++f)
                item.features[f] = noise(rng);
            q.items.push_back(std::move(item));
        }
        queries.push_back(std::move(q));
    }
    return queries;
}

}  // namespace

DatasetSplit synth_generate(const SynthConfig& cfg) {
    if (cfg.group_count < 2) throw std::domain_error("need at least 2 groups");
    if (static_cast<int>(cfg.relevance_prob.size()) != cfg.group_count)
        throw std::domain_error("relevance_prob size must equal group_count");
    for (double p : cfg.relevance_prob)
        if (p < 0.0 || p > 1.0)
            throw std::domain_error("relevance probability out of [0,1]");
    if (!cfg.group_proportion.empty()) {
        if (static_cast<int>(cfg.group_proportion.size()) != cfg.group_count)
            throw std::domain_error("group_proportion size must equal group_count");
        double sum = 0.0;
        for (double p : cfg.group_proportion) sum += p;
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::domain_error("group proportions must sum to 1");
    }
    if (cfg.signal_dims + 1 > cfg.feature_count)
        throw std::domain_error("feature_count too small for signal dims + group dim");

    DatasetSplit split;
    split.feature_count = cfg.feature_count;
    split.group_count = cfg.group_count;
    split.group_feature = cfg.signal_dims;
    split.train = synth_split(cfg, cfg.seed, "train");
    split.validation = synth_split(cfg, cfg.seed, "validation");
    split.test = synth_split(cfg, cfg.seed, "test");
    return split;
}

void standardize(DatasetSplit& split) {
    const int F = split.feature_count;
    std::vector<double> mean(F, 0.0), var(F, 0.0);
    std::size_t count = 0;
    for (const auto& q : split.train)
        for (const auto& item : q.items) {
            ++count;
            for (int f = 0; f < F; ++f) mean[f] += item.features[f];
        }
    if (count == 0) throw std::domain_error("cannot standardize an empty train split");
    for (int f = 0; f < F; ++f) mean[f] /= static_cast<double>(count);
    for (const auto& q : split.train)
        for (const auto& item : q.items)
            for (int f = 0; f < F; ++f) {
                double d = item.features[f] - mean[f];
                var[f] += d * d;
            }
    std::vector<double> sd(F);
    for (int f = 0; f < F; ++f) {
        sd[f] = std::sqrt(var[f] / static_cast<double>(count));
        if (sd[f] == 0.0) sd[f] = 1.0;  // constant feature, leave centered
    }
    auto apply = [&](std::vector<Query>& queries) {
        for (auto& q : queries)
            for (auto& item : q.items)
                for (int f = 0; f < F; ++f)
                    item.features[f] = (item.features[f] - mean[f]) / sd[f];
    };
    apply(split.train);
    apply(split.validation);
    apply(split.test);
}

void mask_group_feature(DatasetSplit& split) {
    if (split.group_feature < 0) return;
    auto apply = [&](std::vector<Query>& queries) {
        for (auto& q : queries)
            for (auto& item : q.items) item.features[split.group_feature] = 0.0;
    };
    apply(split.train);
    apply(split.validation);
    apply(split.test);
}

namespace {

void save_queries(const std::vector<Query>& queries, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (const auto& q : queries) {
        json items = json::array();
        for (const auto& item : q.items)
            items.push_back({{"x", item.features},
                             {"rel", item.relevance},
                             {"g", item.group}});
        os << json{{"qid", q.id}, {"items", items}}.dump() << "\n";
    }
}

std::vector<Query> load_queries(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::vector<Query> queries;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        Query q;
        q.id = j.at("qid").get<std::string>();
        for (const auto& it : j.at("items")) {
            Item item;
            item.features = it.at("x").get<std::vector<double>>();
            item.relevance = it.at("rel").get<int>();
            item.group = it.at("g").get<int>();
            q.items.push_back(std::move(item));
        }
        queries.push_back(std::move(q));
    }
    return queries;
}

}  // namespace

void save_split(const DatasetSplit& split, const std::string& dir) {
    fs::create_directories(dir);
    json meta{{"feature_count", split.feature_count},
              {"group_count", split.group_count},
              {"group_feature", split.group_feature}};
    std::ofstream ms(fs::path(dir) / "meta.json");
    ms << meta.dump(2) << "\n";
    save_queries(split.train, fs::path(dir) / "train.jsonl");
    save_queries(split.validation, fs::path(dir) / "validation.jsonl");
    save_queries(split.test, fs::path(dir) / "test.jsonl");
}

DatasetSplit load_split(const std::string& dir) {
    std::ifstream ms(fs::path(dir) / "meta.json");
    if (!ms) throw std::runtime_error("cannot read dataset meta.json in " + dir);
    json meta = json::parse(ms);
    DatasetSplit split;
    split.feature_count = meta.at("feature_count").get<int>();
    split.group_count = meta.at("group_count").get<int>();
    split.group_feature = meta.at("group_feature").get<int>();
    split.train = load_queries(fs::path(dir) / "train.jsonl");
    split.validation = load_queries(fs::path(dir) / "validation.jsonl");
    split.test = load_queries(fs::path(dir) / "test.jsonl");
    return split;
}

}  // namespace dataset
}  // namespace fairltr
