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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "portshare/conn_record.hpp"
#include "portshare/features.hpp"

namespace portshare {

struct LogNormal {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Background traffic on one destination port.
struct PortProfile {
    std::uint16_t port = 0;
    Proto proto = Proto::tcp;
    double rate = 10.0;               ///< mean connections per minute
    double diurnal_amplitude = 0.5;   ///< relative swing of the 24-hour sinusoid, in [0, 1]
    double diurnal_peak_hour = 14.0;  ///< UTC hour of the daily maximum
    double inbound_fraction = 0.5;    ///< external originator, internal responder
    double internal_fraction = 0.0;   ///< both endpoints internal
    std::uint32_t internal_pool = 200;
    std::uint32_t external_pool = 2000;
    double fresh_external_prob = 0.01;  ///< peer is an address never used before
    LogNormal duration{0.0, 1.0};
    LogNormal orig_bytes{6.0, 1.0};
    LogNormal resp_bytes{8.0, 1.5};
    LogNormal orig_pkts{2.0, 0.5};
    LogNormal resp_pkts{2.5, 0.7};
    std::array<double, kNumConnStates> state_probs{};  ///< canonical state order
};

struct BenignProfile {
    std::string site_id = "site";
    std::string internal_base = "10.0.0.0";   ///< first internal address, pools count up from it
    std::string external_base = "198.18.0.0";
    std::vector<PortProfile> ports;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct ScanProfile {
    std::uint16_t port = 23;
    double rate = 750.0;  ///< connections per minute
    std::uint32_t infected_hosts = 3;
    std::uint64_t victim_space = 1ull << 24;
    ConnState state = ConnState::S0;
    double duration = 0.0;
    std::int64_t start = 0;  ///< epoch seconds of the first attack window
    int length_windows = 63;
    int window_seconds = 60;
    std::string infected_base = "10.0.200.1";
    std::string victim_base = "45.0.0.0";
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Time-sorted synthetic background traffic over [begin, end). Deterministic per seed.
std::vector<ConnRecord> gen_benign(const BenignProfile& profile, std::int64_t begin, std::int64_t end,
                                   int window_seconds = 60);

/// Scan-phase trace: Poisson(rate) unanswered connections per window, each to
/// a victim drawn without replacement until the victim space is exhausted.
std::vector<ConnRecord> gen_scan(const ScanProfile& profile);

/// Keeps each record independently with probability 1/factor.
std::vector<ConnRecord> slow_variant(std::span<const ConnRecord> records, double factor,
                                     std::uint64_t seed);

struct InjectResult {
    std::vector<ConnRecord> records;
    /// Per port, one [start, start + window) interval per window holding attack traffic.
    std::map<std::uint16_t, std::vector<WindowInterval>> intervals;
    std::vector<std::string> warnings;
};

/// Shifts the attack by `offset` seconds and merges it into the benign stream.
InjectResult inject(std::span<const ConnRecord> benign, std::span<const ConnRecord> attack,
                    double offset, int window_seconds = 60);

/// Reference profiles for the two-site scenario. Net-B differs from Net-A in
/// volume, byte distributions and address churn on most ports.
BenignProfile default_profile_net_a();
BenignProfile default_profile_net_b();

nlohmann::ordered_json to_json(const BenignProfile& p);
BenignProfile benign_profile_from_json(const nlohmann::ordered_json& j);
BenignProfile load_benign_profile(const std::string& path);

nlohmann::ordered_json to_json(const ScanProfile& p);
ScanProfile scan_profile_from_json(const nlohmann::ordered_json& j);

}  // namespace portshare
