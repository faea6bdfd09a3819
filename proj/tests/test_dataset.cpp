#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "fairltr/dataset.hpp"

using namespace fairltr;
namespace ds = fairltr::dataset;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("parse letor: dense, sparse, comments, padding") {
    std::istringstream in(
        "2 qid:10 1:0.5 2:-1.25 3:3 # a comment\n"
        "\n"
        "0 qid:10 2:7\n"
        "4 qid:11 5:1.5\n");
    auto recs = ds::parse_letor(in);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].grade == 2);
    CHECK(recs[0].qid == "10");
    CHECK(recs[0].features == std::vector<double>{0.5, -1.25, 3.0, 0.0, 0.0});
    // sparse line padded to max feature id across the stream
    CHECK(recs[1].features == std::vector<double>{0.0, 7.0, 0.0, 0.0, 0.0});
    CHECK(recs[2].features == std::vector<double>{0.0, 0.0, 0.0, 0.0, 1.5});
}

TEST_CASE("parse letor: error positions") {
    auto expect_throw = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            ds::parse_letor(in);
            FAIL("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_throw("x qid:1 1:0.5\n", "line 1");
    expect_throw("1 qid:1 1:0.5\n2 1:0.5\n", "line 2");
    expect_throw("1 qid:1 nonsense\n", "malformed feature");
    expect_throw("1 qid:1 0:0.5\n", "1-based");
}

TEST_CASE("letor round trip") {
    std::istringstream in(
        "3 qid:a 1:1 3:0.25\n"
        "0 qid:b 2:-2\n");
    auto recs = ds::parse_letor(in);
    std::istringstream again(ds::serialize_letor(recs));
    auto recs2 = ds::parse_letor(again);
    REQUIRE(recs2.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(recs2[i].grade == recs[i].grade);
        CHECK(recs2[i].qid == recs[i].qid);
        CHECK(recs2[i].features == recs[i].features);
    }
}

TEST_CASE("binarize") {
    CHECK(ds::binarize(0) == 0);
    CHECK(ds::binarize(2) == 0);
    CHECK(ds::binarize(3) == 1);
    CHECK(ds::binarize(4) == 1);
    CHECK_THROWS_AS(ds::binarize(5), std::domain_error);
    CHECK_THROWS_AS(ds::binarize(-1), std::domain_error);
}

TEST_CASE("group assignment from thresholds") {
    std::vector<double> thresholds{0.0, 1.0};
    CHECK(ds::group_for_value(-0.5, thresholds) == 0);
    CHECK(ds::group_for_value(0.0, thresholds) == 0);  // boundary goes low
    CHECK(ds::group_for_value(0.5, thresholds) == 1);
    CHECK(ds::group_for_value(2.0, thresholds) == 2);

    Query q;
    q.id = "q";
    q.items.push_back({{-1.0, 9.0}, 0, 0});
    q.items.push_back({{0.5, 9.0}, 0, 0});
    q.items.push_back({{3.0, 9.0}, 0, 0});
    std::vector<Query> queries{q};
    ds::assign_groups(queries, 0, thresholds);
    CHECK(queries[0].items[0].group == 0);
    CHECK(queries[0].items[1].group == 1);
    CHECK(queries[0].items[2].group == 2);

    std::vector<double> bad{1.0, 1.0};
    CHECK_THROWS_AS(ds::assign_groups(queries, 0, bad), std::domain_error);
    CHECK_THROWS_AS(ds::assign_groups(queries, 7, thresholds), std::domain_error);
}

TEST_CASE("percentile thresholds: nearest rank") {
    std::vector<double> values{5, 1, 4, 2, 3};  // sorted: 1 2 3 4 5
    std::vector<double> pcts{50.0};
    auto t = ds::percentile_thresholds(values, pcts);
    CHECK(t == std::vector<double>{3.0});

    std::vector<double> pcts2{20.0, 40.0, 60.0, 80.0};
    CHECK(ds::percentile_thresholds(values, pcts2) ==
          std::vector<double>{1.0, 2.0, 3.0, 4.0});

    std::vector<double> empty;
    std::vector<double> p{50.0};
    CHECK_THROWS_AS(ds::percentile_thresholds(empty, p), std::domain_error);
}

TEST_CASE("construct queries: composition and determinism") {
    // Source query "a" has 3 relevant (grade>=3) and 5 irrelevant records;
    // "b" has only 1 relevant so it is ineligible for m=2.
    std::vector<LetorRecord> pool;
    auto add = [&](int grade, const std::string& qid, double x) {
        pool.push_back({grade, qid, {x, -x}});
    };
    for (int i = 0; i < 3; ++i) add(4, "a", 1.0 + i);
    for (int i = 0; i < 5; ++i) add(1, "a", -1.0 - i);
    add(3, "b", 0.1);
    add(0, "b", 0.2);

    auto queries = ds::construct_queries(pool, 6, 2, 4, 99);
    REQUIRE(queries.size() == 4);
    std::set<std::string> ids;
    for (const auto& q : queries) {
        ids.insert(q.id);
        REQUIRE(q.size() == 6);
        int rel = 0;
        for (const auto& item : q.items) rel += item.relevance;
        CHECK(rel == 2);
        CHECK(q.id.rfind("a#", 0) == 0);  // only "a" is eligible
    }
    CHECK(ids.size() == 4);

    auto queries2 = ds::construct_queries(pool, 6, 2, 4, 99);
    for (std::size_t k = 0; k < queries.size(); ++k) {
        CHECK(queries2[k].id == queries[k].id);
        for (int d = 0; d < queries[k].size(); ++d)
            CHECK(queries2[k].items[d].features == queries[k].items[d].features);
    }
    auto queries3 = ds::construct_queries(pool, 6, 2, 4, 100);
    bool any_diff = false;
    for (std::size_t k = 0; k < queries.size() && !any_diff; ++k)
        for (int d = 0; d < queries[k].size(); ++d)
            if (queries3[k].items[d].features != queries[k].items[d].features)
                any_diff = true;
    CHECK(any_diff);

    CHECK_THROWS_AS(ds::construct_queries(pool, 6, 4, 1, 1), std::runtime_error);
    CHECK_THROWS_AS(ds::construct_queries(pool, 2, 2, 1, 1), std::domain_error);
}

TEST_CASE("synthetic generator: rates, groups, structure") {
    ds::SynthConfig cfg;
    cfg.queries_per_split = 200;
    cfg.items_per_query = 20;
    cfg.relevance_prob = {0.7, 0.3};
    cfg.group_proportion = {0.6, 0.4};
    cfg.seed = 5;
    auto split = ds::synth_generate(cfg);

    CHECK(split.train.size() == 200);
    CHECK(split.validation.size() == 200);
    CHECK(split.test.size() == 200);
    CHECK(split.feature_count == 10);
    CHECK(split.group_feature == cfg.signal_dims);

    long long count[2] = {0, 0}, rel[2] = {0, 0};
    for (const auto& q : split.train)
        for (const auto& item : q.items) {
            REQUIRE(item.group >= 0);
            REQUIRE(item.group < 2);
            CHECK(item.features[split.group_feature] ==
                  static_cast<double>(item.group));
            ++count[item.group];
            rel[item.group] += item.relevance;
        }
    double total = count[0] + count[1];
    CHECK(std::abs(count[0] / total - 0.6) < 0.02);
    CHECK(std::abs(static_cast<double>(rel[0]) / count[0] - 0.7) < 0.02);
    CHECK(std::abs(static_cast<double>(rel[1]) / count[1] - 0.3) < 0.02);

    // splits are distinct draws
    CHECK(split.train[0].items[0].features != split.test[0].items[0].features);

    // determinism
    auto split2 = ds::synth_generate(cfg);
    CHECK(split2.train[7].items[3].features == split.train[7].items[3].features);

    cfg.relevance_prob = {0.5};
    CHECK_THROWS_AS(ds::synth_generate(cfg), std::domain_error);
}

TEST_CASE("standardize uses training statistics") {
    DatasetSplit split;
    split.feature_count = 2;
    Query tq;
    tq.id = "t";
    tq.items.push_back({{1.0, 5.0}, 0, 0});
    tq.items.push_back({{3.0, 5.0}, 1, 0});
    split.train = {tq};
    Query vq;
    vq.id = "v";
    vq.items.push_back({{2.0, 7.0}, 0, 0});
    split.validation = {vq};
    split.test = {vq};

    ds::standardize(split);
    // train feature 0: mean 2, sd 1
    CHECK(split.train[0].items[0].features[0] == doctest::Approx(-1.0));
    CHECK(split.train[0].items[1].features[0] == doctest::Approx(1.0));
    // constant feature stays centered, not divided by zero
    CHECK(split.train[0].items[0].features[1] == doctest::Approx(0.0));
    // validation transformed with train stats
    CHECK(split.validation[0].items[0].features[0] == doctest::Approx(0.0));
    CHECK(split.validation[0].items[0].features[1] == doctest::Approx(2.0));
}

TEST_CASE("mask group feature") {
    ds::SynthConfig cfg;
    cfg.queries_per_split = 3;
    cfg.relevance_prob = {0.5, 0.5};
    cfg.seed = 1;
    auto split = ds::synth_generate(cfg);
    ds::mask_group_feature(split);
    for (const auto* qs : {&split.train, &split.validation, &split.test})
        for (const auto& q : *qs)
            for (const auto& item : q.items)
                CHECK(item.features[split.group_feature] == 0.0);
}

TEST_CASE("split save/load round trip") {
    ds::SynthConfig cfg;
    cfg.queries_per_split = 5;
    cfg.items_per_query = 4;
    cfg.relevance_prob = {0.6, 0.4};
    cfg.seed = 11;
    auto split = ds::synth_generate(cfg);

    std::string dir = "/tmp/fairltr_split_test";
    std::filesystem::remove_all(dir);
    ds::save_split(split, dir);
    auto loaded = ds::load_split(dir);

    CHECK(loaded.feature_count == split.feature_count);
    CHECK(loaded.group_count == split.group_count);
    CHECK(loaded.group_feature == split.group_feature);
    REQUIRE(loaded.train.size() == split.train.size());
    for (std::size_t k = 0; k < split.train.size(); ++k) {
        CHECK(loaded.train[k].id == split.train[k].id);
        REQUIRE(loaded.train[k].size() == split.train[k].size());
        for (int d = 0; d < split.train[k].size(); ++d) {
            CHECK(loaded.train[k].items[d].features ==
                  split.train[k].items[d].features);
            CHECK(loaded.train[k].items[d].relevance ==
                  split.train[k].items[d].relevance);
            CHECK(loaded.train[k].items[d].group == split.train[k].items[d].group);
        }
    }
    CHECK_THROWS_AS(ds::load_split("/tmp/fairltr_split_missing"),
                    std::runtime_error);
}

TEST_SUITE_END();
