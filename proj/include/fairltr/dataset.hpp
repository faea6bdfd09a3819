#ifndef FAIRLTR_DATASET_HPP
#define FAIRLTR_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fairltr/types.hpp"

namespace fairltr {

// One line of a LETOR/SVMlight-style file.
struct LetorRecord {
    int grade = 0;  // 0..4
    std::string qid;
    std::vector<double> features;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace dataset {

// Parses `<grade> qid:<id> <fid>:<val> ...` lines. Feature ids are 1-based
// and may be sparse; missing ids default to 0. All feature vectors are padded
// to the maximum feature id seen in the stream.
std::vector<LetorRecord> parse_letor(std::istream& in);

std::string serialize_letor(const std::vector<LetorRecord>& records);

// 1 iff grade >= 3.
int binarize(int grade);

// Group index = number of thresholds strictly below the attribute value.
int group_for_value(double value, std::span<const double> thresholds);

// Resolves percentile ranks (0..100) to attribute-value thresholds on the
// given sample. Percentile p maps to the value below which p percent of the
// sample lies (nearest-rank).
std::vector<double> percentile_thresholds(std::vector<double> values,
                                          std::span<const double> percentiles);

void assign_groups(std::vector<Query>& queries, int attribute_feature_id,
                   std::span<const double> thresholds);

// Builds fixed-size queries by sampling n candidates with exactly m relevant
// items (without replacement) from each eligible source query in the pool.
std::vector<Query> construct_queries(const std::vector<LetorRecord>& pool,
                                     int candidates_per_query,
                                     int relevant_per_query, int query_count,
                                     std::uint64_t seed);

struct SynthConfig {
    int queries_per_split = 500;
    int items_per_query = 20;
    int feature_count = 10;
    int group_count = 2;
    std::vector<double> relevance_prob;     // per group
    std::vector<double> group_proportion;   // per group, sums to 1 (empty = uniform)
    int signal_dims = 4;
    double signal_scale = 1.0;
    double signal_noise_sd = 2.0;
    std::uint64_t seed = 0;
};

// Synthetic stand-in for the real datasets: relevance-correlated signal
// dimensions, pure-noise dimensions, and one group-indicator dimension.
DatasetSplit synth_generate(const SynthConfig& config);

// Per-feature z-scoring with training-split statistics, applied to all splits.
void standardize(DatasetSplit& split);

// Zeroes the group-indicator feature everywhere (group-blind ingestion).
void mask_group_feature(DatasetSplit& split);

void save_split(const DatasetSplit& split, const std::string& dir);
DatasetSplit load_split(const std::string& dir);

}  // namespace dataset
}  // namespace fairltr

#endif
