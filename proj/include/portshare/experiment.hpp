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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "portshare/evalkit.hpp"
#include "portshare/harness.hpp"
#include "portshare/sharing.hpp"

namespace portshare {

inline constexpr const char* kVersion = "0.1.0";

struct AttackConfig {
    std::vector<std::uint16_t> ports{23, 445, 22, 80, 443};
    double rate = 750.0;  ///< fast-variant connections per minute
    double slow_factor = 128.0;
    int windows = 63;
    std::int64_t offset_seconds = 36000;  ///< into the first test day
    std::uint32_t infected_hosts = 3;
};

struct ScenarioConfig {
    BenignProfile net_a = default_profile_net_a();
    BenignProfile net_b = default_profile_net_b();
    std::int64_t t0 = 1593561600;  ///< start of the first training day, UTC midnight
    int train_days = 7;
    int test_days = 1;
    int window_seconds = 60;
    std::vector<std::string> internal_cidrs{"10.0.0.0/8"};
    AttackConfig attack;
    std::vector<std::string> variants{"fast", "slow"};
    std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
    int adapt_k = 10;
    DistanceMethod distance = DistanceMethod::raw_moments;
    int forest_trees = 100;
    std::uint64_t forest_seed = 7;
    double label_quantile = 0.999;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::size_t> report_k{60};
    bool write_model_packages = false;

    void validate() const;
};

nlohmann::ordered_json to_json(const ScenarioConfig& c);
/// Profile entries may be inline objects or paths relative to `base_dir`.
ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);
/// FNV-1a over the canonical JSON form.
std::uint64_t config_hash(const ScenarioConfig& c);

struct NetACheck {
    std::uint64_t seed = 0;
    std::uint16_t port = 0;
    std::size_t windows = 0;
    std::size_t attack_windows = 0;
    std::size_t flagged = 0;
    std::size_t correct = 0;
    double threshold = 0.0;
    double accuracy() const;
};

/// Fraction of windows whose detection label matches the truth.
NetACheck detection_accuracy(const DetectionLabels& labels, const Truth& truth);

struct ScenarioResult {
    std::vector<EvalReport> reports;
    std::vector<NetACheck> net_a;
    std::vector<std::string> diagnostics;
    /// Exported package bytes keyed by "seed<s>/port<p>/<kind>".
    std::map<std::string, std::string> packages;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

/// True iff every Net-A detection run scored accuracy above 0.96.
bool net_a_selfcheck(const std::vector<NetACheck>& checks);

/// Writes manifest, config, reports, curves and tables into `dir`.
void write_run(const std::string& dir, const ScenarioConfig& config, const ScenarioResult& result);

}  // namespace portshare
