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

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <utility>

#include "portshare/errors.hpp"
#include "portshare/harness.hpp"

namespace portshare {

namespace {

using ojson = nlohmann::ordered_json;

std::array<double, kNumConnStates> states(std::initializer_list<std::pair<ConnState, double>> probs)
{
    std::array<double, kNumConnStates> out{};
    double sum = 0.0;
    for (auto [s, p] : probs) {
        out[static_cast<std::size_t>(s)] = p;
        sum += p;
    }
    for (auto& v : out) v /= sum;
    return out;
}

using S = ConnState;

// Mostly answered service traffic with a thin tail of common failure states.
std::array<double, kNumConnStates> service_states(double s0, double rej)
{
    return states({{S::SF, 0.965 - s0 - rej}, {S::S0, s0}, {S::REJ, rej}, {S::S1, 0.01}, {S::RSTO, 0.01},
                   {S::RSTR, 0.01}, {S::OTH, 0.005}});
}

PortProfile service(std::uint16_t port, double rate, double inbound, double internal, double fresh_per_minute)
{
    PortProfile p;
    p.port = port;
    p.rate = rate;
    p.inbound_fraction = inbound;
    p.internal_fraction = internal;
    p.fresh_external_prob = fresh_per_minute / rate;
    p.state_probs = service_states(0.01, 0.01);
    return p;
}

LogNormal ln_from_json(const ojson& j) { return {j.at("mu").get<double>(), j.at("sigma").get<double>()}; }
ojson ln_to_json(const LogNormal& l) { return {{"mu", l.mu}, {"sigma", l.sigma}}; }

}  // namespace

BenignProfile default_profile_net_a()
{
    BenignProfile b;
    b.site_id = "net-a";
    b.internal_base = "10.1.0.0";
    b.external_base = "198.18.0.0";
    b.rng_seed = 101;

    PortProfile telnet = service(23, 12.0, 0.2, 0.6, 0.2);
    telnet.diurnal_amplitude = 0.3;
    telnet.internal_pool = 300;
    telnet.external_pool = 400;
    telnet.duration = {2.0, 1.5};
    telnet.orig_bytes = {5.0, 1.0};
    telnet.resp_bytes = {6.5, 1.2};
    telnet.orig_pkts = {3.0, 0.8};
    telnet.resp_pkts = {3.0, 0.8};

    PortProfile smb = service(445, 10.0, 0.05, 0.75, 0.1);
    smb.diurnal_amplitude = 0.5;
    smb.internal_pool = 500;
    smb.external_pool = 300;
    smb.duration = {0.5, 1.5};
    smb.orig_bytes = {7.0, 1.5};
    smb.resp_bytes = {7.5, 1.5};
    smb.orig_pkts = {2.5, 1.0};
    smb.resp_pkts = {2.5, 1.0};

    PortProfile ssh = service(22, 10.0, 0.6, 0.1, 0.3);
    ssh.diurnal_amplitude = 0.4;
    ssh.internal_pool = 150;
    ssh.external_pool = 3000;
    ssh.duration = {1.0, 2.0};
    ssh.orig_bytes = {7.5, 1.5};
    ssh.resp_bytes = {8.0, 1.8};
    ssh.orig_pkts = {2.5, 1.0};
    ssh.resp_pkts = {2.5, 1.0};

    PortProfile http = service(80, 40.0, 0.2, 0.0, 0.4);
    http.diurnal_amplitude = 0.6;
    http.internal_pool = 2000;
    http.external_pool = 8000;
    http.duration = {0.5, 1.5};
    http.orig_bytes = {6.5, 1.0};
    http.resp_bytes = {9.0, 2.0};
    http.orig_pkts = {2.0, 0.8};
    http.resp_pkts = {2.5, 1.2};
    http.state_probs = service_states(0.01, 0.005);

    PortProfile https = http;
    https.port = 443;
    https.rate = 60.0;
    https.fresh_external_prob = 0.4 / https.rate;
    https.internal_pool = 2500;
    https.external_pool = 12000;
    https.duration = {1.5, 1.8};
    https.orig_bytes = {7.0, 1.2};
    https.resp_bytes = {9.5, 2.0};

    b.ports = {telnet, smb, ssh, http, https};
    return b;
}

BenignProfile default_profile_net_b()
{
    BenignProfile b = default_profile_net_a();
    b.site_id = "net-b";
    b.internal_base = "10.2.0.0";
    b.external_base = "198.19.0.0";
    b.rng_seed = 202;

    // Same failure and churn rates per minute, different volume and payload sizes.
    auto shift = [](PortProfile& p, double rate, double bytes_shift) {
        const double keep = p.rate / rate;
        p.fresh_external_prob *= keep;
        double other = 0.0;
        for (std::size_t s = 0; s < kNumConnStates; ++s) {
            if (s == static_cast<std::size_t>(S::SF)) continue;
            p.state_probs[s] *= keep;
            other += p.state_probs[s];
        }
        p.state_probs[static_cast<std::size_t>(S::SF)] = 1.0 - other;
        p.rate = rate;
        p.orig_bytes.mu += bytes_shift;
        p.resp_bytes.mu += bytes_shift;
        p.orig_pkts.mu += 0.5 * bytes_shift;
        p.resp_pkts.mu += 0.5 * bytes_shift;
    };
    for (auto& p : b.ports) {
        switch (p.port) {
        case 22:
            shift(p, 18.0, 0.8);
            p.internal_fraction = 0.3;
            p.duration = {2.0, 2.0};
            break;
        case 23:
            shift(p, 20.0, 1.0);
            p.duration = {3.0, 1.2};
            break;
        // Public web services: many first-time clients.
        case 80:
            shift(p, 70.0, 0.5);
            p.diurnal_amplitude = 0.7;
            p.fresh_external_prob = 3.0 / p.rate;
            break;
        case 443:
            shift(p, 110.0, 0.7);
            p.diurnal_amplitude = 0.7;
            p.fresh_external_prob = 4.0 / p.rate;
            p.duration = {2.0, 2.0};
            break;
        case 445:
            shift(p, 30.0, 1.2);
            p.internal_fraction = 0.9;
            p.duration = {1.5, 2.0};
            break;
        default:
            break;
        }
    }
    return b;
}

ojson to_json(const BenignProfile& b)
{
    ojson j;
    j["site_id"] = b.site_id;
    j["internal_base"] = b.internal_base;
    j["external_base"] = b.external_base;
    j["rng_seed"] = b.rng_seed;
    ojson ports = ojson::array();
    for (const auto& p : b.ports) {
        ojson jp;
        jp["port"] = p.port;
        jp["proto"] = std::string(to_string(p.proto));
        jp["rate"] = p.rate;
        jp["diurnal_amplitude"] = p.diurnal_amplitude;
        jp["diurnal_peak_hour"] = p.diurnal_peak_hour;
        jp["inbound_fraction"] = p.inbound_fraction;
        jp["internal_fraction"] = p.internal_fraction;
        jp["internal_pool"] = p.internal_pool;
        jp["external_pool"] = p.external_pool;
        jp["fresh_external_prob"] = p.fresh_external_prob;
        jp["duration"] = ln_to_json(p.duration);
        jp["orig_bytes"] = ln_to_json(p.orig_bytes);
        jp["resp_bytes"] = ln_to_json(p.resp_bytes);
        jp["orig_pkts"] = ln_to_json(p.orig_pkts);
        jp["resp_pkts"] = ln_to_json(p.resp_pkts);
        ojson st = ojson::object();
        for (std::size_t s = 0; s < kNumConnStates; ++s) st[std::string(kConnStateNames[s])] = p.state_probs[s];
        jp["states"] = std::move(st);
        ports.push_back(std::move(jp));
    }
    j["ports"] = std::move(ports);
    return j;
}

BenignProfile benign_profile_from_json(const ojson& j)
{
    try {
        BenignProfile b;
        b.site_id = j.value("site_id", b.site_id);
        b.internal_base = j.value("internal_base", b.internal_base);
        b.external_base = j.value("external_base", b.external_base);
        b.rng_seed = j.value("rng_seed", b.rng_seed);
        for (const auto& jp : j.at("ports")) {
            PortProfile p;
            p.port = jp.at("port").get<std::uint16_t>();
            if (jp.contains("proto")) {
                auto proto = parse_proto(jp.at("proto").get<std::string>());
                if (!proto) throw ConfigError("profile: unknown proto");
                p.proto = *proto;
            }
            p.rate = jp.at("rate").get<double>();
            p.diurnal_amplitude = jp.value("diurnal_amplitude", p.diurnal_amplitude);
            p.diurnal_peak_hour = jp.value("diurnal_peak_hour", p.diurnal_peak_hour);
            p.inbound_fraction = jp.value("inbound_fraction", p.inbound_fraction);
            p.internal_fraction = jp.value("internal_fraction", p.internal_fraction);
            p.internal_pool = jp.value("internal_pool", p.internal_pool);
            p.external_pool = jp.value("external_pool", p.external_pool);
            p.fresh_external_prob = jp.value("fresh_external_prob", p.fresh_external_prob);
            if (jp.contains("duration")) p.duration = ln_from_json(jp.at("duration"));
            if (jp.contains("orig_bytes")) p.orig_bytes = ln_from_json(jp.at("orig_bytes"));
            if (jp.contains("resp_bytes")) p.resp_bytes = ln_from_json(jp.at("resp_bytes"));
            if (jp.contains("orig_pkts")) p.orig_pkts = ln_from_json(jp.at("orig_pkts"));
            if (jp.contains("resp_pkts")) p.resp_pkts = ln_from_json(jp.at("resp_pkts"));
            for (const auto& [name, value] : jp.at("states").items()) {
                auto s = parse_conn_state(name);
                if (!s) throw ConfigError("profile: unknown connection state " + name);
                p.state_probs[static_cast<std::size_t>(*s)] = value.get<double>();
            }
            b.ports.push_back(p);
        }
        b.validate();
        return b;
    } catch (const ojson::exception& e) {
        throw ConfigError(std::string("benign profile: ") + e.what());
    }
}

BenignProfile load_benign_profile(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile: " + path);
    auto j = ojson::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("profile is not valid JSON: " + path);
    return benign_profile_from_json(j);
}

ojson to_json(const ScanProfile& p)
{
    ojson j;
    j["port"] = p.port;
    j["rate"] = p.rate;
    j["infected_hosts"] = p.infected_hosts;
    j["victim_space"] = p.victim_space;
    j["state"] = std::string(to_string(p.state));
    j["duration"] = p.duration;
    j["start"] = p.start;
    j["length_windows"] = p.length_windows;
    j["window_seconds"] = p.window_seconds;
    j["infected_base"] = p.infected_base;
    j["victim_base"] = p.victim_base;
    j["rng_seed"] = p.rng_seed;
    return j;
}

ScanProfile scan_profile_from_json(const ojson& j)
{
    try {
        ScanProfile p;
        p.port = j.value("port", p.port);
        p.rate = j.value("rate", p.rate);
        p.infected_hosts = j.value("infected_hosts", p.infected_hosts);
        p.victim_space = j.value("victim_space", p.victim_space);
        if (j.contains("state")) {
            auto s = parse_conn_state(j.at("state").get<std::string>());
            if (!s) throw ConfigError("scan profile: unknown state");
            p.state = *s;
        }
        p.duration = j.value("duration", p.duration);
        p.start = j.value("start", p.start);
        p.length_windows = j.value("length_windows", p.length_windows);
        p.window_seconds = j.value("window_seconds", p.window_seconds);
        p.infected_base = j.value("infected_base", p.infected_base);
        p.victim_base = j.value("victim_base", p.victim_base);
        p.rng_seed = j.value("rng_seed", p.rng_seed);
        p.validate();
        return p;
    } catch (const ojson::exception& e) {
        throw ConfigError(std::string("scan profile: ") + e.what());
    }
}

}  // namespace portshare
