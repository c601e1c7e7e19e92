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
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace portshare {

/// Binary IPv4 or IPv6 address. IPv4 occupies the first four bytes.
struct IpAddress {
    std::array<std::uint8_t, 16> bytes{};
    bool v6 = false;

    static std::optional<IpAddress> parse(std::string_view text);
    bool operator==(const IpAddress&) const = default;
};

struct CidrPrefix {
    IpAddress network;
    int length = 0;

    /// Parses "10.0.0.0/8" or "fd00::/8". A bare address is a host prefix.
    static CidrPrefix parse(std::string_view text);
    bool contains(const IpAddress& ip) const;
    std::string to_string() const;
};

struct SiteConfig {
    std::vector<CidrPrefix> internal_prefixes;
    /// Anonymized logs carry opaque host tokens instead of addresses. When this
    /// set is non-empty it replaces the prefix test.
    std::set<std::string, std::less<>> internal_tokens;
    std::vector<std::uint16_t> monitored_ports{23, 445, 22, 80, 443};
    int window_seconds = 60;

    /// Throws ConfigError when monitored_ports is empty or window_seconds <= 0.
    void validate() const;
};

/// True iff `ip` falls in one of the internal prefixes (or is a listed token).
/// Unparseable addresses that are not tokens are external.
bool is_internal(std::string_view ip, const SiteConfig& site);

}  // namespace portshare
