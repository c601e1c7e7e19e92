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

#include "portshare/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "portshare/errors.hpp"
#include "portshare/text.hpp"

namespace portshare {

namespace {

std::int64_t floor_div(double ts, int window)
{
    return static_cast<std::int64_t>(std::floor(ts / window)) * window;
}

struct Summary {
    double max = 0.0, min = 0.0, var = 0.0, mean = 0.0;
};

// Sorting first makes the result independent of record order within a window.
Summary summarize(std::vector<double>& v)
{
    Summary s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.var = ss / static_cast<double>(v.size());
    return s;
}

double as_double(const std::optional<std::uint64_t>& v) { return v ? static_cast<double>(*v) : 0.0; }

class InternalCache {
public:
    explicit InternalCache(const SiteConfig& site) : site_(site) {}
    bool operator()(const std::string& ip)
    {
        auto it = cache_.find(ip);
        if (it != cache_.end()) return it->second;
        bool v = is_internal(ip, site_);
        cache_.emplace(ip, v);
        return v;
    }

private:
    const SiteConfig& site_;
    std::unordered_map<std::string_view, bool> cache_;
};

FeatureRow window_features(std::span<const ConnRecord* const> recs, InternalCache& internal,
                           std::unordered_set<std::string>& seen)
{
    FeatureRow f{};
    if (recs.empty()) return f;

    std::unordered_set<std::string_view> in_ips, ex_ips;
    std::vector<double> dur, ob, rb, op, rp;
    dur.reserve(recs.size());
    ob.reserve(recs.size());
    rb.reserve(recs.size());
    op.reserve(recs.size());
    rp.reserve(recs.size());
    std::array<double, kNumConnStates> states{};
    double zero_resp = 0.0, failed = 0.0;

    for (const ConnRecord* r : recs) {
        for (const std::string* ip : {&r->orig_ip, &r->resp_ip}) {
            if (internal(*ip)) in_ips.insert(*ip);
            else ex_ips.insert(*ip);
        }
        dur.push_back(r->duration.value_or(0.0));
        ob.push_back(as_double(r->orig_bytes));
        rb.push_back(as_double(r->resp_bytes));
        op.push_back(as_double(r->orig_pkts));
        rp.push_back(as_double(r->resp_pkts));
        if (r->resp_bytes.value_or(0) == 0) zero_resp += 1.0;
        states[static_cast<std::size_t>(r->conn_state)] += 1.0;
        if (is_failed(r->conn_state)) failed += 1.0;
    }

    std::size_t fresh = 0;
    for (auto ip : ex_ips) {
        if (seen.find(std::string(ip)) == seen.end()) ++fresh;
    }
    for (auto ip : ex_ips) seen.emplace(ip);

    f[feature::n_conns] = static_cast<double>(recs.size());
    f[feature::n_distinct_internal_ips] = static_cast<double>(in_ips.size());
    f[feature::n_distinct_external_ips] = static_cast<double>(ex_ips.size());
    f[feature::n_new_external_ips] = static_cast<double>(fresh);

    auto d = summarize(dur);
    f[feature::dur_max] = d.max;
    f[feature::dur_min] = d.min;
    f[feature::dur_var] = d.var;
    f[feature::dur_mean] = d.mean;

    std::size_t col = feature::orig_bytes_max;
    for (auto* v : {&ob, &rb, &op, &rp}) {
        auto s = summarize(*v);
        f[col++] = s.max;
        f[col++] = s.var;
        f[col++] = s.mean;
    }
    f[feature::n_conns_zero_resp_bytes] = zero_resp;
    for (std::size_t s = 0; s < kNumConnStates; ++s) f[feature::state_first + s] = states[s];
    f[feature::n_failed_conns] = failed;
    return f;
}

}  // namespace

std::optional<std::size_t> feature_index(std::string_view name)
{
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (kFeatureNames[i] == name) return i;
    }
    return std::nullopt;
}

std::string_view to_string(Label l)
{
    switch (l) {
    case Label::benign: return "benign";
    case Label::malicious: return "malicious";
    case Label::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

std::optional<Label> parse_label(std::string_view s)
{
    if (s == "benign" || s == "0") return Label::benign;
    if (s == "malicious" || s == "1") return Label::malicious;
    if (s == "unlabeled" || s.empty()) return Label::unlabeled;
    return std::nullopt;
}

FeatureVector FeatureVector::from_named(std::uint16_t port, std::int64_t window_start,
                                        const std::map<std::string, double, std::less<>>& named)
{
    FeatureVector v{port, window_start, {}};
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        auto it = named.find(kFeatureNames[i]);
        if (it == named.end()) {
            throw ValidationError("feature vector is missing feature " + std::string(kFeatureNames[i]));
        }
        v.values[i] = it->second;
    }
    return v;
}

std::vector<double> FeatureMatrix::column(std::size_t f) const
{
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][f];
    return out;
}

void FeatureMatrix::validate() const
{
    if (window_starts.size() != rows.size() || labels.size() != rows.size()) {
        throw ValidationError("feature matrix: inconsistent row counts");
    }
    for (std::size_t i = 1; i < window_starts.size(); ++i) {
        if (window_starts[i] <= window_starts[i - 1]) {
            throw ValidationError("feature matrix: window starts not strictly increasing at row " +
                                  std::to_string(i));
        }
    }
    for (const auto& r : rows) {
        for (double v : r) {
            if (!std::isfinite(v)) throw ValidationError("feature matrix: non-finite value");
        }
    }
}

std::map<std::uint16_t, FeatureMatrix> featurize(std::span<const ConnRecord> records,
                                                 const SiteConfig& site, SeenIpState& seen,
                                                 const FeaturizeOptions& options)
{
    site.validate();
    const int w = site.window_seconds;

    double latest = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        if (r.ts < latest - options.reorder_tolerance_seconds) {
            throw ValidationError("featurize: record at ts=" + text::format_double(r.ts) +
                                  " arrives more than " +
                                  text::format_double(options.reorder_tolerance_seconds) +
                                  "s behind ts=" + text::format_double(latest));
        }
        latest = std::max(latest, r.ts);
    }

    std::vector<const ConnRecord*> ordered;
    ordered.reserve(records.size());
    for (const auto& r : records) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ConnRecord* a, const ConnRecord* b) { return a->ts < b->ts; });

    std::int64_t begin = 0, end = 0;
    if (options.range_begin && options.range_end) {
        begin = *options.range_begin;
        end = *options.range_end;
        if (begin % w != 0 || end % w != 0 || end < begin) {
            throw ConfigError("featurize: range must be window-aligned and non-decreasing");
        }
    } else if (!ordered.empty()) {
        begin = floor_div(ordered.front()->ts, w);
        end = floor_div(ordered.back()->ts, w) + w;
    }
    const auto n_windows = static_cast<std::size_t>((end - begin) / w);

    InternalCache internal(site);
    std::map<std::uint16_t, FeatureMatrix> out;
    for (std::uint16_t port : site.monitored_ports) {
        auto& seen_port = seen.per_port[port];
        FeatureMatrix m;
        m.port = port;
        m.window_seconds = w;
        m.window_starts.resize(n_windows);
        m.rows.assign(n_windows, FeatureRow{});
        m.labels.assign(n_windows, Label::unlabeled);

        std::vector<std::vector<const ConnRecord*>> buckets(n_windows);
        for (const ConnRecord* r : ordered) {
            if (r->resp_port != port) continue;
            auto ws = floor_div(r->ts, w);
            if (ws < begin || ws >= end) continue;
            buckets[static_cast<std::size_t>((ws - begin) / w)].push_back(r);
        }
        for (std::size_t i = 0; i < n_windows; ++i) {
            m.window_starts[i] = begin + static_cast<std::int64_t>(i) * w;
            m.rows[i] = window_features(buckets[i], internal, seen_port);
        }
        out.emplace(port, std::move(m));
    }
    return out;
}

FeatureMatrix assign_labels(FeatureMatrix matrix, std::span<const WindowInterval> intervals,
                            std::vector<std::string>* warnings)
{
    std::fill(matrix.labels.begin(), matrix.labels.end(), Label::benign);
    if (matrix.rows.empty()) return matrix;
    const std::int64_t lo = matrix.window_starts.front();
    const std::int64_t hi = matrix.window_starts.back() + matrix.window_seconds;
    for (const auto& iv : intervals) {
        if (iv.end <= lo || iv.begin >= hi) {
            if (warnings) {
                warnings->push_back("interval [" + std::to_string(iv.begin) + "," +
                                    std::to_string(iv.end) + ") outside matrix range, ignored");
            }
            continue;
        }
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            const auto ws = matrix.window_starts[i];
            if (ws < iv.end && ws + matrix.window_seconds > iv.begin) matrix.labels[i] = Label::malicious;
        }
    }
    return matrix;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix)
{
    out << "window_start,port,label";
    for (auto n : kFeatureNames) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << matrix.window_starts[i] << ',' << matrix.port << ',' << to_string(matrix.labels[i]);
        for (double v : matrix.rows[i]) out << ',' << text::format_double(v);
        out << '\n';
    }
    if (!out) throw IoError("write error on feature CSV");
}

void write_feature_csv_file(const std::string& path, const FeatureMatrix& matrix)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature CSV: " + path);
    write_feature_csv(out, matrix);
}

FeatureMatrix read_feature_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("feature CSV: missing header");
    auto header = text::split(text::trim(line), ',');
    if (header.size() < 3 || header[0] != "window_start" || header[1] != "port" || header[2] != "label") {
        throw ValidationError("feature CSV: header must start with window_start,port,label");
    }
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (header.size() <= i + 3 || header[i + 3] != kFeatureNames[i]) {
            throw ValidationError("feature CSV: expected column " + std::string(kFeatureNames[i]) +
                                  " at position " + std::to_string(i + 3));
        }
    }

    FeatureMatrix m;
    bool have_port = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = text::trim(line);
        if (t.empty()) continue;
        auto cols = text::split(t, ',');
        const std::string where = "feature CSV line " + std::to_string(line_no);
        if (cols.size() != kNumFeatures + 3) throw ValidationError(where + ": wrong column count");
        auto ws = text::parse_int(cols[0]);
        auto port = text::parse_uint(cols[1]);
        auto label = parse_label(cols[2]);
        if (!ws || !port || *port > 65535 || !label) throw ValidationError(where + ": bad key columns");
        if (have_port && *port != m.port) throw ValidationError(where + ": mixed ports");
        m.port = static_cast<std::uint16_t>(*port);
        have_port = true;
        FeatureRow row{};
        for (std::size_t i = 0; i < kNumFeatures; ++i) {
            auto v = text::parse_double(cols[i + 3]);
            if (!v || !std::isfinite(*v)) {
                throw ValidationError(where + ": bad value for " + std::string(kFeatureNames[i]));
            }
            row[i] = *v;
        }
        m.window_starts.push_back(*ws);
        m.rows.push_back(row);
        m.labels.push_back(*label);
    }
    if (m.window_starts.size() >= 2) {
        auto step = m.window_starts[1] - m.window_starts[0];
        for (std::size_t i = 2; i < m.window_starts.size(); ++i) {
            step = std::min(step, m.window_starts[i] - m.window_starts[i - 1]);
        }
        if (step > 0) m.window_seconds = static_cast<int>(step);
    }
    m.validate();
    return m;
}

FeatureMatrix read_feature_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature CSV: " + path);
    return read_feature_csv(in);
}

}  // namespace portshare
