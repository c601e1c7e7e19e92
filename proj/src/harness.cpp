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

#include "portshare/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <unordered_set>

#include "portshare/errors.hpp"
#include "portshare/site_config.hpp"

namespace portshare {

namespace {

std::uint64_t mix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint32_t ipv4_base(const std::string& text)
{
    auto ip = IpAddress::parse(text);
    if (!ip || ip->v6) throw ConfigError("expected an IPv4 base address: " + text);
    return (std::uint32_t{ip->bytes[0]} << 24) | (std::uint32_t{ip->bytes[1]} << 16) |
           (std::uint32_t{ip->bytes[2]} << 8) | std::uint32_t{ip->bytes[3]};
}

std::string ipv4_string(std::uint32_t v)
{
    return std::to_string(v >> 24) + '.' + std::to_string((v >> 16) & 0xFF) + '.' +
           std::to_string((v >> 8) & 0xFF) + '.' + std::to_string(v & 0xFF);
}

double quantize_us(double t) { return std::floor(t * 1e6) / 1e6; }

bool answered(ConnState s)
{
    switch (s) {
    case ConnState::S1:
    case ConnState::SF:
    case ConnState::S2:
    case ConnState::S3:
    case ConnState::RSTO:
    case ConnState::RSTR:
    case ConnState::RSTRH:
        return true;
    default:
        return false;
    }
}

std::uint64_t draw_count(std::mt19937_64& rng, const LogNormal& ln, std::uint64_t min_value)
{
    std::lognormal_distribution<double> d(ln.mu, ln.sigma);
    const double v = std::round(d(rng));
    return std::max<std::uint64_t>(min_value, static_cast<std::uint64_t>(std::min(v, 1e15)));
}

double window_rate(const PortProfile& p, std::int64_t window_start, int window_seconds)
{
    const double mid = static_cast<double>(window_start) + 0.5 * window_seconds;
    const double hour = std::fmod(mid, 86400.0) / 3600.0;
    const double swing = std::cos(2.0 * std::numbers::pi * (hour - p.diurnal_peak_hour) / 24.0);
    return p.rate * (window_seconds / 60.0) * (1.0 + p.diurnal_amplitude * swing);
}

void gen_port(const BenignProfile& profile, const PortProfile& p, std::int64_t begin, std::int64_t end,
              int window_seconds, std::vector<ConnRecord>& out)
{
    const std::uint64_t port_seed = mix(profile.rng_seed ^ mix(p.port + 0x5151ull));
    std::mt19937_64 rng;
    const std::uint32_t internal0 = ipv4_base(profile.internal_base);
    const std::uint32_t external0 = ipv4_base(profile.external_base);
    // Fresh peers come from a per-port block past the shared pool, 64 slots per window.
    const std::uint32_t fresh0 = external0 + p.external_pool + (static_cast<std::uint32_t>(p.port % 251) << 20);
    std::uint32_t fresh_next = 0;

    std::discrete_distribution<int> state_dist(p.state_probs.begin(), p.state_probs.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> internal_pick(0, p.internal_pool - 1);
    std::uniform_int_distribution<std::uint32_t> external_pick(0, p.external_pool - 1);
    std::uniform_int_distribution<int> ephemeral(32768, 60999);

    auto internal_host = [&] { return ipv4_string(internal0 + internal_pick(rng)); };
    auto external_host = [&] {
        if (unit(rng) < p.fresh_external_prob) return ipv4_string(fresh0 + (fresh_next++ & 0xFFFFFu));
        return ipv4_string(external0 + external_pick(rng));
    };

    for (std::int64_t ws = begin; ws < end; ws += window_seconds) {
        // Each window has its own stream, so any split of a range yields the same traffic.
        rng.seed(mix(port_seed ^ static_cast<std::uint64_t>(ws)));
        fresh_next = static_cast<std::uint32_t>(static_cast<std::uint64_t>(ws / window_seconds) * 64u);
        state_dist.reset();
        unit.reset();
        std::poisson_distribution<int> count(std::max(window_rate(p, ws, window_seconds), 0.0));
        const int k = count(rng);
        std::vector<double> offsets(static_cast<std::size_t>(k));
        for (auto& o : offsets) o = unit(rng) * window_seconds;
        std::sort(offsets.begin(), offsets.end());
        for (double o : offsets) {
            ConnRecord r;
            r.ts = quantize_us(static_cast<double>(ws) + o);
            r.proto = p.proto;
            r.resp_port = p.port;
            r.orig_port = static_cast<std::uint16_t>(ephemeral(rng));
            r.conn_state = static_cast<ConnState>(state_dist(rng));

            const double dir = unit(rng);
            if (dir < p.internal_fraction) {
                r.orig_ip = internal_host();
                r.resp_ip = internal_host();
            } else if (dir < p.internal_fraction + p.inbound_fraction) {
                r.orig_ip = external_host();
                r.resp_ip = internal_host();
            } else {
                r.orig_ip = internal_host();
                r.resp_ip = external_host();
            }

            if (answered(r.conn_state)) {
                std::lognormal_distribution<double> dur(p.duration.mu, p.duration.sigma);
                r.duration = quantize_us(dur(rng));
                r.orig_bytes = draw_count(rng, p.orig_bytes, 0);
                r.resp_bytes = draw_count(rng, p.resp_bytes, 0);
                r.orig_pkts = draw_count(rng, p.orig_pkts, 1);
                r.resp_pkts = draw_count(rng, p.resp_pkts, 1);
            } else {
                r.orig_bytes = 0;
                r.resp_bytes = 0;
                r.orig_pkts = 1 + (unit(rng) < 0.3 ? 1 : 0);
                r.resp_pkts = r.conn_state == ConnState::REJ ? 1 : 0;
                if (r.conn_state != ConnState::S0 && r.conn_state != ConnState::OTH) {
                    r.duration = quantize_us(unit(rng) * 0.01);
                }
            }
            out.push_back(std::move(r));
        }
    }
}

}  // namespace

void BenignProfile::validate() const
{
    if (ports.empty()) throw ConfigError("benign profile " + site_id + ": no ports");
    ipv4_base(internal_base);
    ipv4_base(external_base);
    for (const auto& p : ports) {
        const std::string who = "benign profile " + site_id + " port " + std::to_string(p.port) + ": ";
        if (!(p.rate > 0.0)) throw ConfigError(who + "rate must be > 0");
        if (p.diurnal_amplitude < 0.0 || p.diurnal_amplitude > 1.0) throw ConfigError(who + "amplitude outside [0,1]");
        if (p.internal_pool < 1 || p.external_pool < 1) throw ConfigError(who + "host pools must be >= 1");
        if (p.inbound_fraction < 0.0 || p.internal_fraction < 0.0 ||
            p.inbound_fraction + p.internal_fraction > 1.0) {
            throw ConfigError(who + "direction fractions must be in [0,1] and sum to <= 1");
        }
        if (p.fresh_external_prob < 0.0 || p.fresh_external_prob > 1.0) throw ConfigError(who + "fresh probability outside [0,1]");
        double sum = 0.0;
        for (double v : p.state_probs) {
            if (v < 0.0 || !std::isfinite(v)) throw ConfigError(who + "negative state probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(who + "state probabilities must sum to 1");
    }
}

void ScanProfile::validate() const
{
    if (!(rate > 0.0)) throw ConfigError("scan profile: rate must be > 0");
    if (length_windows < 1) throw ConfigError("scan profile: length must be >= 1 window");
    if (window_seconds < 1) throw ConfigError("scan profile: window_seconds must be >= 1");
    if (infected_hosts < 1 || victim_space < 1) throw ConfigError("scan profile: empty host pools");
    if (duration < 0.0) throw ConfigError("scan profile: negative duration");
}

std::vector<ConnRecord> gen_benign(const BenignProfile& profile, std::int64_t begin, std::int64_t end,
                                   int window_seconds)
{
    profile.validate();
    if (end <= begin) throw ConfigError("gen_benign: empty time range");
    if (window_seconds < 1) throw ConfigError("gen_benign: window_seconds must be >= 1");

    std::vector<ConnRecord> out;
    for (const auto& p : profile.ports) gen_port(profile, p, begin, end, window_seconds, out);
    std::stable_sort(out.begin(), out.end(), [](const ConnRecord& a, const ConnRecord& b) { return a.ts < b.ts; });
    const std::string prefix = "C" + profile.site_id + "-";
    for (std::size_t i = 0; i < out.size(); ++i) out[i].uid = prefix + std::to_string(i);
    return out;
}

std::vector<ConnRecord> gen_scan(const ScanProfile& profile)
{
    profile.validate();
    std::mt19937_64 rng(mix(profile.rng_seed ^ 0xA77AC4ull));
    const std::uint32_t infected0 = ipv4_base(profile.infected_base);
    const std::uint32_t victim0 = ipv4_base(profile.victim_base);
    std::poisson_distribution<int> count(profile.rate * profile.window_seconds / 60.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> host(0, profile.infected_hosts - 1);
    std::uniform_int_distribution<std::uint64_t> victim(0, profile.victim_space - 1);
    std::uniform_int_distribution<int> ephemeral(32768, 60999);
    std::unordered_set<std::uint64_t> used;

    std::vector<ConnRecord> out;
    for (int w = 0; w < profile.length_windows; ++w) {
        const double ws = static_cast<double>(profile.start) + static_cast<double>(w) * profile.window_seconds;
        const int k = count(rng);
        std::vector<double> offsets(static_cast<std::size_t>(k));
        for (auto& o : offsets) o = unit(rng) * profile.window_seconds;
        std::sort(offsets.begin(), offsets.end());
        for (double o : offsets) {
            if (used.size() >= profile.victim_space) used.clear();
            std::uint64_t v = victim(rng);
            while (!used.insert(v).second) v = victim(rng);

            ConnRecord r;
            r.ts = quantize_us(ws + o);
            r.uid = "S" + std::to_string(out.size());
            r.orig_ip = ipv4_string(infected0 + host(rng));
            r.resp_ip = ipv4_string(victim0 + static_cast<std::uint32_t>(v));
            r.orig_port = static_cast<std::uint16_t>(ephemeral(rng));
            r.resp_port = profile.port;
            r.proto = Proto::tcp;
            r.duration = profile.duration;
            r.orig_bytes = 0;
            r.resp_bytes = 0;
            r.orig_pkts = 1;
            r.resp_pkts = 0;
            r.conn_state = profile.state;
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<ConnRecord> slow_variant(std::span<const ConnRecord> records, double factor, std::uint64_t seed)
{
    if (!(factor >= 1.0)) throw ConfigError("slow_variant: factor must be >= 1");
    std::mt19937_64 rng(mix(seed ^ 0x510Bull));
    std::bernoulli_distribution keep(1.0 / factor);
    std::vector<ConnRecord> out;
    for (const auto& r : records) {
        if (keep(rng)) out.push_back(r);
    }
    return out;
}

InjectResult inject(std::span<const ConnRecord> benign, std::span<const ConnRecord> attack, double offset,
                    int window_seconds)
{
    if (window_seconds < 1) throw ConfigError("inject: window_seconds must be >= 1");
    InjectResult res;
    std::vector<ConnRecord> shifted(attack.begin(), attack.end());
    for (auto& r : shifted) r.ts += offset;

    auto by_ts = [](const ConnRecord& a, const ConnRecord& b) { return a.ts < b.ts; };
    if (!std::is_sorted(benign.begin(), benign.end(), by_ts) || !std::is_sorted(shifted.begin(), shifted.end(), by_ts)) {
        throw ValidationError("inject: inputs must be time-sorted");
    }
    if (!shifted.empty() && !benign.empty() &&
        (shifted.front().ts < benign.front().ts || shifted.back().ts > benign.back().ts)) {
        res.warnings.push_back("inject: attack extends outside the benign time range");
    }

    std::map<std::uint16_t, std::vector<std::int64_t>> windows;
    for (const auto& r : shifted) {
        auto ws = static_cast<std::int64_t>(std::floor(r.ts / window_seconds)) * window_seconds;
        auto& v = windows[r.resp_port];
        if (v.empty() || v.back() != ws) v.push_back(ws);
    }
    for (auto& [port, starts] : windows) {
        auto& iv = res.intervals[port];
        for (auto ws : starts) iv.push_back({ws, ws + window_seconds});
    }

    res.records.reserve(benign.size() + shifted.size());
    std::merge(benign.begin(), benign.end(), shifted.begin(), shifted.end(), std::back_inserter(res.records), by_ts);
    return res;
}

}  // namespace portshare
