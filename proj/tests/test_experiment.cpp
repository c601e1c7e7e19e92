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

#include <filesystem>
#include <fstream>

#include "portshare/errors.hpp"
#include "portshare/experiment.hpp"

using namespace portshare;

namespace {

ScenarioConfig small(std::vector<std::uint16_t> ports)
{
    ScenarioConfig c;
    c.train_days = 2;
    c.attack.ports = std::move(ports);
    c.seeds = {1};
    c.forest_trees = 30;
    return c;
}

}  // namespace

TEST_CASE("baseline-only scenario yields one report per port and variant")
{
    auto c = small({23, 445});
    c.strategies = {Strategy::baseline};
    auto res = run_scenario(c);
    CHECK(res.reports.size() == 4);
    for (const auto& r : res.reports) {
        CHECK(r.strategy == Strategy::baseline);
        // Thinning can leave an attack window empty.
        if (r.variant == "fast") CHECK(r.m == 63);
        else CHECK(r.m <= 63);
        CHECK(r.recall.size() == 1440);
    }
}

TEST_CASE("identical profiles: shared model does as well as the local one")
{
    auto c = small({23, 22});
    c.net_b = c.net_a;
    c.net_b.site_id = "net-b";
    c.net_b.rng_seed = 303;
    c.variants = {"fast"};
    c.strategies = {Strategy::baseline, Strategy::model_sharing};
    auto res = run_scenario(c);
    REQUIRE(res.reports.size() == 4);
    for (auto port : c.attack.ports) {
        double base = -1, shared = -1;
        for (const auto& r : res.reports) {
            if (r.port != port) continue;
            (r.strategy == Strategy::baseline ? base : shared) = r.recall_at(63);
        }
        CHECK(std::abs(base - shared) <= 0.05);
    }
}

TEST_CASE("full strategy set, self-check and run directory")
{
    auto c = small({23});
    auto res = run_scenario(c);
    CHECK(res.reports.size() == 8);
    REQUIRE(res.net_a.size() == 1);
    CHECK(net_a_selfcheck(res.net_a));
    CHECK(res.packages.size() == 2);

    const auto dir = std::filesystem::temp_directory_path() / "portshare_run_test";
    std::filesystem::remove_all(dir);
    write_run(dir.string(), c, res);
    for (auto f : {"manifest.json", "config.json", "reports.csv", "curves.csv", "comparison.csv",
                   "precision_at_60_slow.csv", "fp_at_60_slow.csv", "selfcheck.csv"})
        CHECK(std::filesystem::exists(dir / f));
    auto again = load_scenario((dir / "config.json").string());
    CHECK(config_hash(again) == config_hash(c));
    std::filesystem::remove_all(dir);
}

TEST_CASE("self-check arithmetic")
{
    NetACheck perfect{1, 23, 1440, 63, 63, 1440, 0.5};
    CHECK(perfect.accuracy() == 1.0);
    CHECK(net_a_selfcheck({perfect}));
    NetACheck blind{1, 23, 1440, 63, 0, 1377, 0.5};
    CHECK(blind.accuracy() == doctest::Approx(1377.0 / 1440.0));
    CHECK_FALSE(net_a_selfcheck({perfect, blind}));
}

TEST_CASE("config validation")
{
    ScenarioConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.attack.ports = {8080};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.attack.offset_seconds = 86000;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.variants = {"medium"};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(config_hash(scenario_from_json(to_json(c))) == config_hash(c));
}

#ifdef PORTSHARE_CONFIG_DIR
TEST_CASE("shipped scenario config equals the built-in default")
{
    auto c = load_scenario(std::string(PORTSHARE_CONFIG_DIR) + "/scenario.json");
    CHECK(config_hash(c) == config_hash(ScenarioConfig{}));
}
#endif
