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
#include <numeric>
#include <random>
#include <sstream>

#include "portshare/errors.hpp"
#include "portshare/forest.hpp"

using namespace portshare;

namespace {

/// Feature `informative` separates the classes; every other column is noise.
FeatureMatrix one_informative(std::size_t n, std::size_t informative, std::uint64_t seed,
                              double gap = 10.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    FeatureMatrix m;
    for (std::size_t i = 0; i < n; ++i) {
        const bool mal = i % 2 == 1;
        FeatureRow r{};
        for (auto& v : r) v = g(rng);
        r[informative] = g(rng) + (mal ? gap : 0.0);
        m.window_starts.push_back(static_cast<std::int64_t>(i) * 60);
        m.rows.push_back(r);
        m.labels.push_back(mal ? Label::malicious : Label::benign);
    }
    return m;
}

double sum(const WeightVector& w)
{
    return std::accumulate(w.values().begin(), w.values().end(), 0.0);
}

}  // namespace

TEST_CASE("separable data is fit exactly")
{
    auto m = one_informative(200, 3, 1);
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.rng_seed = 9;
    auto forest = train_forest(m, cfg);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const bool predicted = forest.predict_proba(m.rows[i]) > 0.5;
        CHECK(predicted == (m.labels[i] == Label::malicious));
    }
}

TEST_CASE("the informative feature dominates the weights")
{
    // Small samples: noise columns pick up split credit, but the informative one leads.
    for (std::size_t j : {0u, 21u, 34u}) {
        auto m = one_informative(600, j, 100 + j);
        ForestConfig cfg;
        cfg.rng_seed = j;
        auto w = feature_weights(train_forest(m, cfg));
        CHECK(std::max_element(w.values().begin(), w.values().end()) - w.values().begin() == static_cast<long>(j));
        CHECK(std::abs(sum(w) - 1.0) <= 1e-9);
    }
    // The credit noise gets from chance splits shrinks with the sample size.
    auto m = one_informative(16000, 21, 7);
    ForestConfig cfg;
    cfg.rng_seed = 8;
    auto w = feature_weights(train_forest(m, cfg));
    CHECK(w[21] > 0.9);
}

TEST_CASE("same seed gives the same forest")
{
    auto m = one_informative(300, 5, 2, 1.0);
    ForestConfig cfg;
    cfg.n_trees = 15;
    cfg.rng_seed = 77;
    auto a = feature_weights(train_forest(m, cfg));
    auto b = feature_weights(train_forest(m, cfg));
    CHECK(a == b);
}

TEST_CASE("permuted labels leave nothing to learn")
{
    auto m = one_informative(800, 4, 3);
    std::mt19937_64 rng(5);
    std::shuffle(m.labels.begin(), m.labels.end(), rng);
    ForestConfig cfg;
    cfg.rng_seed = 6;
    auto forest = train_forest(m, cfg);
    const double oob = forest.oob_accuracy(m);
    CHECK(oob >= 0.4);
    CHECK(oob <= 0.6);
}

TEST_CASE("duplicated informative columns share credit")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = one_informative(400, 2, 50 + seed, 3.0);
        for (auto& r : m.rows) r[9] = r[2];
        ForestConfig cfg;
        cfg.rng_seed = seed;
        auto w = feature_weights(train_forest(m, cfg));
        CHECK(w[2] <= 2.0 * w[9]);
        CHECK(w[9] <= 2.0 * w[2]);
    }
}

TEST_CASE("one-class data is rejected")
{
    auto m = one_informative(50, 1, 4);
    std::fill(m.labels.begin(), m.labels.end(), Label::benign);
    CHECK_THROWS_AS(train_forest(m, ForestConfig{}), ValidationError);
}

TEST_CASE("weight vector invariants")
{
    std::array<double, kNumFeatures> v{};
    v[0] = 0.5;
    v[1] = 0.5;
    CHECK_NOTHROW(WeightVector::from_values(v));
    v[1] = 0.7;
    CHECK_THROWS_AS(WeightVector::from_values(v), ValidationError);
    v[1] = -0.5;
    v[0] = 1.5;
    CHECK_THROWS_AS(WeightVector::from_values(v), ValidationError);
    std::array<double, kNumFeatures> zero{};
    CHECK_THROWS(WeightVector::normalized(zero));
    CHECK(std::abs(sum(WeightVector::uniform()) - 1.0) <= 1e-12);
}

TEST_CASE("weights csv round-trip")
{
    std::array<double, kNumFeatures> v{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) v[f] = 1.0 / (1.0 + static_cast<double>(f));
    auto w = WeightVector::normalized(v);
    std::stringstream io;
    write_weights_csv(io, w);
    CHECK(read_weights_csv(io) == w);
}
