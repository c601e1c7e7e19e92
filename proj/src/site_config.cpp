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

#include "portshare/site_config.hpp"

#include <arpa/inet.h>

#include <cstring>

#include "portshare/errors.hpp"
#include "portshare/text.hpp"

namespace portshare {

std::optional<IpAddress> IpAddress::parse(std::string_view text)
{
    if (text.empty() || text.size() > 63) return std::nullopt;
    char buf[64];
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';

    IpAddress ip;
    if (text.find(':') == std::string_view::npos) {
        if (inet_pton(AF_INET, buf, ip.bytes.data()) != 1) return std::nullopt;
        return ip;
    }
    if (inet_pton(AF_INET6, buf, ip.bytes.data()) != 1) return std::nullopt;
    ip.v6 = true;
    return ip;
}

CidrPrefix CidrPrefix::parse(std::string_view text)
{
    auto slash = text.find('/');
    auto addr = IpAddress::parse(text.substr(0, slash));
    if (!addr) throw ConfigError("invalid CIDR prefix: " + std::string(text));
    CidrPrefix p;
    p.network = *addr;
    const int max_len = addr->v6 ? 128 : 32;
    p.length = max_len;
    if (slash != std::string_view::npos) {
        auto len = text::parse_int(text.substr(slash + 1));
        if (!len || *len < 0 || *len > max_len) {
            throw ConfigError("invalid CIDR prefix length: " + std::string(text));
        }
        p.length = static_cast<int>(*len);
    }
    // Canonicalize host bits to zero.
    for (int bit = p.length; bit < max_len; ++bit) {
        p.network.bytes[bit / 8] &= static_cast<std::uint8_t>(~(0x80u >> (bit % 8)));
    }
    return p;
}

bool CidrPrefix::contains(const IpAddress& ip) const
{
    if (ip.v6 != network.v6) return false;
    const int full = length / 8;
    if (std::memcmp(ip.bytes.data(), network.bytes.data(), static_cast<std::size_t>(full)) != 0) {
        return false;
    }
    const int rem = length % 8;
    if (rem == 0) return true;
    const auto mask = static_cast<std::uint8_t>(0xFFu << (8 - rem));
    return (ip.bytes[full] & mask) == (network.bytes[full] & mask);
}

std::string CidrPrefix::to_string() const
{
    char buf[INET6_ADDRSTRLEN];
    inet_ntop(network.v6 ? AF_INET6 : AF_INET, network.bytes.data(), buf, sizeof(buf));
    return std::string(buf) + "/" + std::to_string(length);
}

void SiteConfig::validate() const
{
    if (monitored_ports.empty()) throw ConfigError("site config: monitored_ports is empty");
    if (window_seconds <= 0) throw ConfigError("site config: window_seconds must be positive");
}

bool is_internal(std::string_view ip, const SiteConfig& site)
{
    if (!site.internal_tokens.empty()) {
        return site.internal_tokens.find(ip) != site.internal_tokens.end();
    }
    if (site.internal_prefixes.empty()) return false;
    auto addr = IpAddress::parse(ip);
    if (!addr) return false;
    for (const auto& prefix : site.internal_prefixes) {
        if (prefix.contains(*addr)) return true;
    }
    return false;
}

}  // namespace portshare
