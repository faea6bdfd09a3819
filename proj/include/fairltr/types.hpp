#ifndef FAIRLTR_TYPES_HPP
#define FAIRLTR_TYPES_HPP

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fairltr {

struct Item {
    std::vector<double> features;
    int relevance = 0;  // binary {0,1}
    int group = 0;
};

struct Query {
    std::string id;
    std::vector<Item> items;

    int size() const { return static_cast<int>(items.size()); }

    // Indices of the items belonging to `group`.
    std::vector<int> group_members(int group) const {
        std::vector<int> out;
        for (int d = 0; d < size(); ++d)
            if (items[d].group == group) out.push_back(d);
        return out;
    }
};

struct DatasetSplit {
    std::vector<Query> train;
    std::vector<Query> validation;
    std::vector<Query> test;
    int feature_count = 0;
    int group_count = 0;
    int group_feature = -1;  // feature dimension holding the group indicator, -1 if none
};

// A ranking stored as the 1-based rank of every item: rank_of[d] = sigma(d).
struct Ranking {
    std::vector<int> rank_of;

    Ranking() = default;
    explicit Ranking(std::vector<int> ranks) : rank_of(std::move(ranks)) {}

    int size() const { return static_cast<int>(rank_of.size()); }
    int rank(int item) const { return rank_of[item]; }

    // Items in presentation order (position 1 first).
    std::vector<int> order() const {
        std::vector<int> ord(rank_of.size());
        for (int d = 0; d < size(); ++d) ord[rank_of[d] - 1] = d;
        return ord;
    }

    static Ranking from_order(std::span<const int> order) {
        std::vector<int> ranks(order.size());
        for (int pos = 0; pos < static_cast<int>(order.size()); ++pos)
            ranks[order[pos]] = pos + 1;
        return Ranking(std::move(ranks));
    }

    static Ranking identity(int n) {
        std::vector<int> ranks(n);
        std::iota(ranks.begin(), ranks.end(), 1);
        return Ranking(std::move(ranks));
    }

    bool valid() const {
        std::vector<int> seen(rank_of.size(), 0);
        for (int r : rank_of) {
            if (r < 1 || r > size()) return false;
            if (seen[r - 1]++) return false;
        }
        return true;
    }
};

// Stable descending argsort, ties broken by index. Returns a Ranking.
inline Ranking rank_by_scores(std::span<const double> scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    return Ranking::from_order(order);
}

}  // namespace fairltr

#endif
