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

#include "portshare/conn_record.hpp"

namespace portshare {

std::optional<ConnState> parse_conn_state(std::string_view s)
{
    for (std::size_t i = 0; i < kNumConnStates; ++i) {
        if (kConnStateNames[i] == s) return static_cast<ConnState>(i);
    }
    return std::nullopt;
}

std::string_view to_string(ConnState s)
{
    return kConnStateNames[static_cast<std::size_t>(s)];
}

std::optional<Proto> parse_proto(std::string_view s)
{
    if (s == "tcp") return Proto::tcp;
    if (s == "udp") return Proto::udp;
    if (s == "icmp") return Proto::icmp;
    return std::nullopt;
}

std::string_view to_string(Proto p)
{
    switch (p) {
    case Proto::tcp: return "tcp";
    case Proto::udp: return "udp";
    case Proto::icmp: return "icmp";
    }
    return "tcp";
}

bool is_failed(ConnState s)
{
    switch (s) {
    case ConnState::S0:
    case ConnState::REJ:
    case ConnState::RSTO:
    case ConnState::RSTR:
    case ConnState::RSTOS0:
    case ConnState::RSTRH:
    case ConnState::SH:
    case ConnState::SHR:
        return true;
    default:
        return false;
    }
}

}  // namespace portshare
