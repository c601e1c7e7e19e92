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
#include <random>
#include <sstream>

#include "portshare/errors.hpp"
#include "portshare/features.hpp"
#include "portshare/site_config.hpp"

using namespace portshare;

namespace {

SiteConfig site23()
{
    SiteConfig s;
    s.internal_prefixes = {CidrPrefix::parse("10.0.0.0/8")};
    s.monitored_ports = {23};
    return s;
}

ConnRecord conn(double ts, std::string orig, std::string resp, double dur, ConnState st,
                std::optional<std::uint64_t> resp_bytes = 0)
{
    ConnRecord r;
    r.ts = ts;
    r.orig_ip = std::move(orig);
    r.resp_ip = std::move(resp);
    r.resp_port = 23;
    r.duration = dur;
    r.resp_bytes = resp_bytes;
    r.conn_state = st;
    return r;
}

FeatureMatrix one_window(std::vector<ConnRecord> recs)
{
    SeenIpState seen;
    FeaturizeOptions opt;
    opt.range_begin = 0;
    opt.range_end = 60;
    return featurize(recs, site23(), seen, opt).at(23);
}

}  // namespace

TEST_CASE("empty window is all zero")
{
    auto m = one_window({});
    REQUIRE(m.size() == 1);
    for (double v : m.rows[0]) CHECK(v == 0.0);
}

TEST_CASE("single unanswered connection")
{
    auto m = one_window({conn(1.0, "10.0.0.5", "45.0.0.1", 2.0, ConnState::S0)});
    const auto& r = m.rows[0];
    CHECK(r[feature::n_conns] == 1);
    CHECK(r[feature::n_new_external_ips] == 1);
    CHECK(r[feature::n_distinct_internal_ips] == 1);
    CHECK(r[feature::n_distinct_external_ips] == 1);
    CHECK(r[feature::dur_max] == 2.0);
    CHECK(r[feature::dur_min] == 2.0);
    CHECK(r[feature::dur_mean] == 2.0);
    CHECK(r[feature::dur_var] == 0.0);
    CHECK(r[feature::n_conns_zero_resp_bytes] == 1);
    CHECK(r[*feature_index("state_S0")] == 1);
    CHECK(r[feature::n_failed_conns] == 1);
    CHECK(r[feature::resp_bytes_max] == 0);
    CHECK(r[*feature_index("state_SF")] == 0);
}

TEST_CASE("population variance of durations")
{
    auto m = one_window({conn(1, "10.0.0.5", "45.0.0.1", 1.0, ConnState::SF, 10),
                         conn(2, "10.0.0.5", "45.0.0.1", 2.0, ConnState::SF, 10),
                         conn(3, "10.0.0.5", "45.0.0.1", 3.0, ConnState::SF, 10)});
    CHECK(m.rows[0][feature::dur_mean] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.rows[0][feature::dur_var] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.rows[0][feature::n_failed_conns] == 0);
}

TEST_CASE("unset resp_bytes counts as zero response")
{
    auto m = one_window({conn(1, "10.0.0.5", "45.0.0.1", 1.0, ConnState::OTH, std::nullopt)});
    CHECK(m.rows[0][feature::n_conns_zero_resp_bytes] == 1);
}

TEST_CASE("new external addresses carry across calls")
{
    SeenIpState seen;
    FeaturizeOptions opt;
    opt.range_begin = 0;
    opt.range_end = 120;
    std::vector<ConnRecord> train = {conn(5, "10.0.0.1", "45.0.0.1", 1, ConnState::SF, 5)};
    featurize(train, site23(), seen, opt);
    opt.range_begin = 120;
    opt.range_end = 180;
    std::vector<ConnRecord> test = {conn(125, "10.0.0.1", "45.0.0.1", 1, ConnState::SF, 5),
                                    conn(126, "10.0.0.1", "45.0.0.2", 1, ConnState::SF, 5)};
    auto m = featurize(test, site23(), seen, opt).at(23);
    CHECK(m.rows[0][feature::n_new_external_ips] == 1);
    CHECK(m.rows[0][feature::n_distinct_external_ips] == 2);
}

TEST_CASE("featurizer is invariant to record order within the tolerance")
{
    std::mt19937_64 rng(4);
    std::vector<ConnRecord> recs;
    std::uniform_real_distribution<double> ts(0, 600), dur(0, 5);
    std::uniform_int_distribution<int> host(1, 20), st(0, 12);
    for (int i = 0; i < 400; ++i) {
        recs.push_back(conn(ts(rng), "10.0.0." + std::to_string(host(rng)),
                            "45.0.0." + std::to_string(host(rng)), dur(rng),
                            static_cast<ConnState>(st(rng)), static_cast<std::uint64_t>(host(rng) % 3)));
    }
    std::sort(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.ts < b.ts; });
    FeaturizeOptions opt;
    opt.range_begin = 0;
    opt.range_end = 600;
    SeenIpState s1;
    auto sorted = featurize(recs, site23(), s1, opt).at(23);
    for (int trial = 0; trial < 5; ++trial) {
        auto shuffled = recs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        SeenIpState s2;
        auto m = featurize(shuffled, site23(), s2, opt).at(23);
        REQUIRE(m.size() == sorted.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                CHECK(m.rows[i][f] == doctest::Approx(sorted.rows[i][f]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("record far behind the stream is rejected")
{
    std::vector<ConnRecord> recs = {conn(10000, "10.0.0.1", "45.0.0.1", 1, ConnState::SF),
                                    conn(10, "10.0.0.1", "45.0.0.1", 1, ConnState::SF)};
    SeenIpState seen;
    CHECK_THROWS_AS(featurize(recs, site23(), seen), ValidationError);
}

TEST_CASE("labels from intervals")
{
    FeatureMatrix m;
    m.port = 23;
    for (int i = 0; i < 1440; ++i) {
        m.window_starts.push_back(i * 60);
        m.rows.push_back({});
        m.labels.push_back(Label::unlabeled);
    }
    std::vector<WindowInterval> iv = {{600 * 60, 663 * 60}};
    auto lab = assign_labels(m, iv);
    CHECK(std::count(lab.labels.begin(), lab.labels.end(), Label::malicious) == 63);

    auto none = assign_labels(m, {});
    CHECK(std::count(none.labels.begin(), none.labels.end(), Label::benign) == 1440);

    std::vector<WindowInterval> all = {{0, 1440 * 60}};
    auto every = assign_labels(m, all);
    CHECK(std::count(every.labels.begin(), every.labels.end(), Label::malicious) == 1440);

    std::vector<std::string> warnings;
    std::vector<WindowInterval> outside = {{1440 * 60, 1500 * 60}};
    assign_labels(m, outside, &warnings);
    CHECK(warnings.size() == 1);
}

TEST_CASE("feature csv round-trip")
{
    auto m = one_window({conn(1.0, "10.0.0.5", "45.0.0.1", 1.0 / 3.0, ConnState::S0)});
    m.labels[0] = Label::malicious;
    std::stringstream io;
    write_feature_csv(io, m);
    auto back = read_feature_csv(io);
    CHECK(back.port == m.port);
    CHECK(back.window_starts == m.window_starts);
    CHECK(back.rows == m.rows);
    CHECK(back.labels == m.labels);
}
