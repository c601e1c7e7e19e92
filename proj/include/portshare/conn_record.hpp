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
#include <optional>
#include <string>
#include <string_view>

namespace portshare {

enum class Proto : std::uint8_t { tcp, udp, icmp };

/// Zeek connection states, in the canonical column order used by the featurizer.
enum class ConnState : std::uint8_t {
    S0, S1, SF, REJ, S2, S3, RSTO, RSTR, RSTOS0, RSTRH, SH, SHR, OTH
};

inline constexpr std::size_t kNumConnStates = 13;

inline constexpr std::array<std::string_view, kNumConnStates> kConnStateNames = {
    "S0", "S1", "SF", "REJ", "S2", "S3", "RSTO", "RSTR", "RSTOS0", "RSTRH", "SH", "SHR", "OTH"};

std::optional<ConnState> parse_conn_state(std::string_view s);
std::string_view to_string(ConnState s);

std::optional<Proto> parse_proto(std::string_view s);
std::string_view to_string(Proto p);

/// Unanswered, rejected, reset or half-open connections.
bool is_failed(ConnState s);

/// One conn.log entry. Optional numeric fields are absent when Zeek wrote the
/// unset marker; they stay absent until featurization.
struct ConnRecord {
    double ts = 0.0;
    std::string uid;
    std::string orig_ip;
    std::string resp_ip;
    std::uint16_t orig_port = 0;
    std::uint16_t resp_port = 0;
    Proto proto = Proto::tcp;
    std::optional<double> duration;
    std::optional<std::uint64_t> orig_bytes;
    std::optional<std::uint64_t> resp_bytes;
    std::optional<std::uint64_t> orig_pkts;
    std::optional<std::uint64_t> resp_pkts;
    ConnState conn_state = ConnState::OTH;

    bool operator==(const ConnRecord&) const = default;
};

}  // namespace portshare
