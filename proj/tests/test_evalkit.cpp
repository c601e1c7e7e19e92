/*
 * Copyright 2026 The portshare Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "portshare/errors.hpp"
#include "portshare/evalkit.hpp"

using namespace portshare;

namespace {

/// Ranking over windows 0..n-1 (times 60) in the given order.
AlertRanking ranking_of(const std::vector<std::int64_t>& order)
{
    AlertRanking r;
    r.port = 23;
    for (std::size_t i = 0; i < order.size(); ++i) {
        r.entries.push_back({order[i] * 60, static_cast<double>(order.size() - i)});
    }
    return r;
}

Truth truth_of(std::size_t n, const std::vector<std::int64_t>& malicious)
{
    Truth t;
    for (std::size_t i = 0; i < n; ++i) t[static_cast<std::int64_t>(i) * 60] = false;
    for (auto w : malicious) t[w * 60] = true;
    return t;
}

/// Malicious windows first: the ideal ranking.
AlertRanking oracle_ranking(std::size_t n, const std::vector<std::int64_t>& malicious)
{
    std::vector<std::int64_t> order = malicious;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::find(malicious.begin(), malicious.end(), static_cast<std::int64_t>(i)) == malicious.end())
            order.push_back(static_cast<std::int64_t>(i));
    }
    return ranking_of(order);
}

std::vector<std::int64_t> span_of(std::int64_t first, std::int64_t count)
{
    std::vector<std::int64_t> v(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = first + i;
    return v;
}

}  // namespace

TEST_CASE("ideal recall")
{
    auto mal = span_of(600, 63);
    auto truth = truth_of(1440, mal);
    auto r = oracle_ranking(1440, mal);
    CHECK(recall_at_k(r, truth, 63) == 1.0);
    for (std::size_t k = 1; k <= 63; ++k) CHECK(recall_at_k(r, truth, k) == static_cast<double>(k) / 63.0);

    // Malicious windows last.
    std::vector<std::int64_t> order;
    for (std::int64_t i = 0; i < 1440; ++i)
        if (i < 600 || i >= 663) order.push_back(i);
    for (auto w : mal) order.push_back(w);
    CHECK(recall_at_k(ranking_of(order), truth, 1440 - 63) == 0.0);

    CHECK_THROWS_AS(recall_at_k(r, truth_of(1440, {}), 10), ValidationError);
    CHECK_THROWS_AS(recall_at_k(r, truth, 0), ValidationError);
    CHECK_THROWS_AS(recall_at_k(r, truth, 1441), ValidationError);
}

TEST_CASE("precision and false positives")
{
    auto mal = span_of(0, 63);
    auto truth = truth_of(1440, mal);
    auto top = precision_fp_at_k(oracle_ranking(1440, mal), truth, 60);
    CHECK(top.precision == 1.0);
    CHECK(top.fp == 0);

    // 49 hits and 11 misses in the top 60.
    std::vector<std::int64_t> order = span_of(0, 49);
    for (auto w : span_of(100, 11)) order.push_back(w);
    for (std::int64_t i = 49; i < 1440; ++i)
        if (i < 100 || i >= 111) order.push_back(i);
    auto p = precision_fp_at_k(ranking_of(order), truth, 60);
    CHECK(p.fp == 11);
    CHECK(p.precision == 49.0 / 60.0);
    CHECK(truncate2(p.precision) == 0.81);
    CHECK_THROWS_AS(precision_fp_at_k(ranking_of(order), truth, 0), ValidationError);
}

TEST_CASE("two-decimal truncation")
{
    CHECK(truncate2(52.0 / 60.0) == 0.86);
    CHECK(truncate2(37.0 / 60.0) == 0.61);
    CHECK(truncate2(42.0 / 60.0) == 0.70);
    CHECK(truncate2(1.0) == 1.0);
    CHECK(truncate2(0.0) == 0.0);
}

TEST_CASE("metric laws on random rankings")
{
    std::mt19937_64 rng(1);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 200;
        std::vector<std::int64_t> order = span_of(0, n);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::int64_t> mal(order.begin(), order.begin() + static_cast<long>(1 + rng() % 40));
        std::shuffle(order.begin(), order.end(), rng);
        auto r = ranking_of(order);
        auto truth = truth_of(n, mal);
        const std::size_t m = mal.size();
        double prev_recall = 0.0;
        std::size_t prev_fp = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            const double rec = recall_at_k(r, truth, k);
            const auto pf = precision_fp_at_k(r, truth, k);
            const auto tp = true_positives_at_k(r, truth, k);
            CHECK(pf.precision == static_cast<double>(k - pf.fp) / static_cast<double>(k));
            CHECK(rec * static_cast<double>(m) == doctest::Approx(static_cast<double>(tp)).epsilon(1e-12));
            CHECK(rec >= prev_recall);
            CHECK(pf.fp >= prev_fp);
            prev_recall = rec;
            prev_fp = pf.fp;
        }
        CHECK(prev_recall == 1.0);

        // Relabel windows by a fixed shift: metrics do not change.
        auto shifted = r;
        for (auto& e : shifted.entries) e.window_start += 86400;
        Truth shifted_truth;
        for (auto [w, v] : truth) shifted_truth[w + 86400] = v;
        CHECK(recall_at_k(shifted, shifted_truth, 50) == recall_at_k(r, truth, 50));
    }
}

TEST_CASE("report validates its own invariants")
{
    auto mal = span_of(10, 5);
    auto rep = evaluate(oracle_ranking(100, mal), truth_of(100, mal), Strategy::baseline, "fast", 1);
    CHECK(rep.m == 5);
    CHECK(rep.recall.size() == 100);
    CHECK(rep.recall_at(5) == 1.0);
    CHECK(rep.at_k.at(60).fp == 55);
    CHECK_NOTHROW(rep.validate());
    rep.recall[3] = 0.1;
    CHECK_THROWS_AS(rep.validate(), ValidationError);
}

TEST_CASE("comparison groups and averages")
{
    auto mal = span_of(10, 5);
    auto truth = truth_of(100, mal);
    auto good = oracle_ranking(100, mal);
    std::vector<std::int64_t> order = span_of(0, 100);
    std::reverse(order.begin(), order.end());
    auto bad = ranking_of(order);

    std::vector<EvalReport> single = {evaluate(good, truth, Strategy::baseline, "slow", 1)};
    auto one = compare_strategies(single);
    REQUIRE(!one.rows.empty());
    CHECK(one.rows[0].recall_at_m == 1.0);
    CHECK(one.rows[0].seeds == 1);
    CHECK(one.rows[0].precision.at(60) == single[0].at_k.at(60).precision);

    std::vector<EvalReport> reps = {evaluate(good, truth, Strategy::weight_sharing, "slow", 1),
                                    evaluate(good, truth, Strategy::weight_adaptation, "slow", 1),
                                    evaluate(bad, truth, Strategy::baseline, "slow", 1),
                                    evaluate(good, truth, Strategy::baseline, "slow", 2),
                                    evaluate(good, truth, Strategy::weight_sharing, "slow", 2),
                                    evaluate(good, truth, Strategy::weight_adaptation, "slow", 2)};
    auto cmp = compare_strategies(reps);
    auto row = [&](Strategy s) {
        for (const auto& r : cmp.rows)
            if (r.strategy == s && r.port == "23") return r;
        FAIL("missing row");
        return ComparisonRow{};
    };
    CHECK(row(Strategy::baseline).recall_at_m == doctest::Approx(0.5));
    CHECK(row(Strategy::baseline).recall_at_m_sd > 0.0);
    const auto ws = row(Strategy::weight_sharing);
    const auto wa = row(Strategy::weight_adaptation);
    CHECK(ws.recall_at_m == wa.recall_at_m);
    CHECK(ws.precision == wa.precision);
    CHECK(ws.fp == wa.fp);

    auto dup = reps;
    dup.push_back(reps[0]);
    CHECK_THROWS_AS(compare_strategies(dup), ValidationError);

    auto mismatched = reps;
    mismatched[0] = evaluate(good, truth, Strategy::weight_sharing, "slow", 1, std::vector<std::size_t>{30});
    CHECK_THROWS_AS(compare_strategies(mismatched), ValidationError);
}

TEST_CASE("truth csv")
{
    std::istringstream in("window_start,label\n0,malicious\n60,0\n120,1\n180,benign\n");
    auto t = read_truth_csv(in);
    CHECK(t.size() == 4);
    CHECK(t.at(0));
    CHECK_FALSE(t.at(60));
    CHECK(t.at(120));
    std::istringstream bad("window_start,label\n0,maybe\n");
    CHECK_THROWS_AS(read_truth_csv(bad), ValidationError);
}

TEST_CASE("strategy names")
{
    for (auto s : kAllStrategies) CHECK(parse_strategy(to_string(s)) == s);
    CHECK_THROWS(parse_strategy("magic"));
}
