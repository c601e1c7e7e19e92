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
#include <cmath>

#include "oracles.hpp"
#include "portshare/errors.hpp"
#include "portshare/features.hpp"
#include "portshare/harness.hpp"
#include "portshare/site_config.hpp"

using namespace portshare;

namespace {

constexpr std::int64_t kT0 = 1593561600;

BenignProfile flat_profile(double rate, std::uint64_t seed)
{
    BenignProfile p;
    p.site_id = "t";
    p.internal_base = "10.9.0.0";
    p.rng_seed = seed;
    PortProfile port;
    port.port = 22;
    port.rate = rate;
    port.diurnal_amplitude = 0.0;
    port.state_probs[static_cast<std::size_t>(ConnState::SF)] = 0.9;
    port.state_probs[static_cast<std::size_t>(ConnState::S0)] = 0.1;
    p.ports.push_back(port);
    return p;
}

bool same_traffic(const ConnRecord& a, const ConnRecord& b)
{
    auto x = a, y = b;
    x.uid.clear();
    y.uid.clear();
    return x == y;
}

std::vector<ConnRecord> sequence(std::size_t n)
{
    std::vector<ConnRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].ts = static_cast<double>(i) * 0.01;
        out[i].uid = std::to_string(i);
        out[i].resp_port = 23;
    }
    return out;
}

}  // namespace

TEST_CASE("connection count sits in the poisson band")
{
    auto recs = gen_benign(flat_profile(60.0, 1), kT0, kT0 + 600);
    const auto [lo, hi] = oracle::poisson_band(600.0, 0.001);
    CHECK(static_cast<std::int64_t>(recs.size()) >= lo);
    CHECK(static_cast<std::int64_t>(recs.size()) <= hi);
    CHECK(std::is_sorted(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.ts < b.ts; }));
    for (const auto& r : recs) {
        CHECK(r.ts >= kT0);
        CHECK(r.ts < kT0 + 600);
    }
}

TEST_CASE("generator is deterministic and consistent across pieces")
{
    auto p = flat_profile(30.0, 5);
    auto a = gen_benign(p, kT0, kT0 + 7200);
    auto b = gen_benign(p, kT0, kT0 + 7200);
    CHECK(a == b);

    auto first = gen_benign(p, kT0, kT0 + 3000);
    auto second = gen_benign(p, kT0 + 3000, kT0 + 7200);
    REQUIRE(first.size() + second.size() == a.size());
    first.insert(first.end(), second.begin(), second.end());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_traffic(a[i], first[i]));

    p.rng_seed = 6;
    CHECK(gen_benign(p, kT0, kT0 + 7200) != a);
    CHECK_THROWS(gen_benign(p, kT0, kT0));
}

TEST_CASE("flat rate passes a dispersion test")
{
    const double rate = 20.0;
    auto recs = gen_benign(flat_profile(rate, 9), kT0, kT0 + 1440 * 60);
    std::vector<std::int64_t> counts(1440, 0);
    for (const auto& r : recs) ++counts[static_cast<std::size_t>((r.ts - kT0) / 60)];
    const double stat = oracle::dispersion_statistic(counts, rate);
    CHECK(stat <= oracle::chi_square_upper(1439.0, 0.001));
    CHECK(stat >= oracle::chi_square_upper(1439.0, 0.999));
}

TEST_CASE("scan trace volume and shape")
{
    ScanProfile s;
    s.start = kT0;
    auto recs = gen_scan(s);
    const auto [lo, hi] = oracle::poisson_band(750.0 * 63, 0.001);
    CHECK(static_cast<std::int64_t>(recs.size()) >= lo);
    CHECK(static_cast<std::int64_t>(recs.size()) <= hi);
    for (const auto& r : recs) {
        CHECK(r.conn_state == ConnState::S0);
        CHECK(r.resp_bytes == 0u);
        CHECK(r.ts >= kT0);
        CHECK(r.ts < kT0 + 63 * 60);
    }

    s.length_windows = 1;
    auto one = gen_scan(s);
    CHECK(std::all_of(one.begin(), one.end(), [](auto& r) { return r.ts < kT0 + 60; }));
}

TEST_CASE("small victim pool saturates the distinct-destination count")
{
    ScanProfile s;
    s.start = kT0;
    s.victim_space = 100;
    s.rate = 2000;
    s.length_windows = 1;
    auto recs = gen_scan(s);
    SiteConfig site;
    site.internal_prefixes = {CidrPrefix::parse("10.0.0.0/8")};
    site.monitored_ports = {23};
    SeenIpState seen;
    auto m = featurize(recs, site, seen).at(23);
    CHECK(m.rows[0][feature::n_distinct_external_ips] == 100);
}

TEST_CASE("slow variant")
{
    auto recs = sequence(128000);
    auto same = slow_variant(recs, 1.0, 3);
    CHECK(same == recs);

    auto kept = slow_variant(recs, 128.0, 4);
    const double sd = std::sqrt(128000.0 * (1.0 / 128) * (127.0 / 128));
    CHECK(std::abs(static_cast<double>(kept.size()) - 1000.0) <= 3 * sd);
    // Subsequence: uids appear in increasing order.
    for (std::size_t i = 1; i < kept.size(); ++i) CHECK(std::stoul(kept[i - 1].uid) < std::stoul(kept[i].uid));

    CHECK(slow_variant(recs, 128000.0 * 1e6, 5).empty());
    CHECK_THROWS_AS(slow_variant(recs, 0.5, 1), ConfigError);
}

TEST_CASE("inject merges and reports windows")
{
    auto benign = gen_benign(flat_profile(30.0, 2), kT0, kT0 + 1440 * 60);
    auto none = inject(benign, {}, 0.0);
    CHECK(none.records == benign);
    CHECK(none.intervals.empty());

    ScanProfile s;
    s.start = 0;
    auto scan = gen_scan(s);
    auto res = inject(benign, scan, static_cast<double>(kT0 + 36000));
    CHECK(res.records.size() == benign.size() + scan.size());
    CHECK(std::is_sorted(res.records.begin(), res.records.end(), [](auto& a, auto& b) { return a.ts < b.ts; }));
    REQUIRE(res.intervals.count(23) == 1);
    CHECK(res.intervals.at(23).size() == 63);
    CHECK(res.intervals.at(23).front().begin == kT0 + 36000);
    CHECK(res.warnings.empty());
}

TEST_CASE("attacks on two ports keep separate intervals")
{
    ScanProfile a, b;
    a.port = 23;
    a.start = 0;
    a.length_windows = 5;
    b.port = 445;
    b.start = 600;
    b.length_windows = 3;
    b.rng_seed = 2;
    auto sa = gen_scan(a), sb = gen_scan(b);
    std::vector<ConnRecord> both;
    std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both),
               [](auto& x, auto& y) { return x.ts < y.ts; });
    auto res = inject({}, both, 0.0);
    CHECK(res.intervals.at(23).size() == 5);
    CHECK(res.intervals.at(445).size() == 3);
    CHECK(res.intervals.at(445).front().begin == 600);

    SiteConfig site;
    site.internal_prefixes = {CidrPrefix::parse("10.0.0.0/8")};
    site.monitored_ports = {23, 445};
    SeenIpState seen;
    FeaturizeOptions opt;
    opt.range_begin = 0;
    opt.range_end = 900;
    auto feats = featurize(res.records, site, seen, opt);
    auto lab23 = assign_labels(feats.at(23), res.intervals.at(23));
    auto lab445 = assign_labels(feats.at(445), res.intervals.at(445));
    CHECK(std::count(lab23.labels.begin(), lab23.labels.end(), Label::malicious) == 5);
    CHECK(std::count(lab445.labels.begin(), lab445.labels.end(), Label::malicious) == 3);
    CHECK(lab23.labels[10] == Label::benign);
    CHECK(lab445.labels[10] == Label::malicious);
}

TEST_CASE("profile json round-trip")
{
    auto p = default_profile_net_b();
    auto back = benign_profile_from_json(to_json(p));
    CHECK(to_json(back).dump() == to_json(p).dump());
    auto bad = to_json(p);
    bad["ports"][0]["rate"] = -1.0;
    CHECK_THROWS(benign_profile_from_json(bad));
}

TEST_CASE("fast scan windows exceed benign training windows on every port")
{
    auto profile = default_profile_net_a();
    SiteConfig site;
    site.internal_prefixes = {CidrPrefix::parse("10.0.0.0/8")};
    SeenIpState seen;
    FeaturizeOptions opt;
    opt.range_begin = kT0;
    opt.range_end = kT0 + 2 * 86400;
    auto train = featurize(gen_benign(profile, kT0, kT0 + 2 * 86400), site, seen, opt);
    for (auto port : site.monitored_ports) {
        ScanProfile s;
        s.port = port;
        s.start = kT0 + 2 * 86400;
        s.length_windows = 10;
        auto scan = gen_scan(s);
        opt.range_begin = kT0 + 2 * 86400;
        opt.range_end = kT0 + 2 * 86400 + 600;
        SeenIpState test_seen = seen;
        auto attack = featurize(scan, site, test_seen, opt).at(port);
        for (auto f : {feature::n_conns, *feature_index("state_S0"), feature::n_conns_zero_resp_bytes,
                       feature::n_new_external_ips}) {
            auto col = train.at(port).column(f);
            std::sort(col.begin(), col.end());
            const double p999 = col[static_cast<std::size_t>(0.999 * (col.size() - 1))];
            for (const auto& row : attack.rows) CHECK(row[f] > p999);
        }
    }
}
