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
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "portshare/conn_record.hpp"
#include "portshare/site_config.hpp"

namespace portshare {

inline constexpr std::size_t kNumFeatures = 35;

/// Canonical column order. Identical across sites; part of every file format.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    // traffic
    "n_conns", "n_distinct_internal_ips", "n_distinct_external_ips", "n_new_external_ips",
    // duration
    "dur_max", "dur_min", "dur_var", "dur_mean",
    // bytes and packets
    "orig_bytes_max", "orig_bytes_var", "orig_bytes_mean",
    "resp_bytes_max", "resp_bytes_var", "resp_bytes_mean",
    "orig_pkts_max", "orig_pkts_var", "orig_pkts_mean",
    "resp_pkts_max", "resp_pkts_var", "resp_pkts_mean",
    "n_conns_zero_resp_bytes",
    // connection state
    "state_S0", "state_S1", "state_SF", "state_REJ", "state_S2", "state_S3", "state_RSTO",
    "state_RSTR", "state_RSTOS0", "state_RSTRH", "state_SH", "state_SHR", "state_OTH",
    "n_failed_conns"};

namespace feature {
inline constexpr std::size_t n_conns = 0;
inline constexpr std::size_t n_distinct_internal_ips = 1;
inline constexpr std::size_t n_distinct_external_ips = 2;
inline constexpr std::size_t n_new_external_ips = 3;
inline constexpr std::size_t dur_max = 4;
inline constexpr std::size_t dur_min = 5;
inline constexpr std::size_t dur_var = 6;
inline constexpr std::size_t dur_mean = 7;
inline constexpr std::size_t orig_bytes_max = 8;
inline constexpr std::size_t resp_bytes_max = 11;
inline constexpr std::size_t resp_bytes_mean = 13;
inline constexpr std::size_t n_conns_zero_resp_bytes = 20;
inline constexpr std::size_t state_first = 21;
inline constexpr std::size_t n_failed_conns = 34;
}  // namespace feature

/// Index of a canonical feature name, or nullopt.
std::optional<std::size_t> feature_index(std::string_view name);

using FeatureRow = std::array<double, kNumFeatures>;

enum class Label : std::uint8_t { unlabeled, benign, malicious };

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view s);

struct FeatureVector {
    std::uint16_t port = 0;
    std::int64_t window_start = 0;
    FeatureRow values{};

    /// Builds a vector from named values; throws ValidationError naming the
    /// first missing canonical feature.
    static FeatureVector from_named(std::uint16_t port, std::int64_t window_start,
                                    const std::map<std::string, double, std::less<>>& named);
};

struct FeatureMatrix {
    std::uint16_t port = 0;
    int window_seconds = 60;
    std::vector<std::int64_t> window_starts;
    std::vector<FeatureRow> rows;
    std::vector<Label> labels;

    std::size_t size() const { return rows.size(); }
    FeatureVector row(std::size_t i) const { return {port, window_starts[i], rows[i]}; }
    std::vector<double> column(std::size_t feature) const;

    /// Sorted unique window starts, consistent sizes, finite values.
    void validate() const;
};

/// External IPs already observed, per port. Carries from training into testing.
struct SeenIpState {
    std::map<std::uint16_t, std::unordered_set<std::string>> per_port;
};

struct FeaturizeOptions {
    /// Explicit window range [begin, end) in epoch seconds, aligned to the
    /// window size. Without it the range spans the stream's first to last record.
    std::optional<std::int64_t> range_begin;
    std::optional<std::int64_t> range_end;
    /// Records may arrive this many seconds behind the latest timestamp seen.
    double reorder_tolerance_seconds = 3600.0;
};

/// Aggregates records into one FeatureMatrix per monitored port. Windows with no
/// traffic on a port produce all-zero rows. Absent durations and counters count as 0.
std::map<std::uint16_t, FeatureMatrix> featurize(std::span<const ConnRecord> records,
                                                 const SiteConfig& site, SeenIpState& seen,
                                                 const FeaturizeOptions& options = {});

/// Half-open time interval [begin, end) in epoch seconds.
struct WindowInterval {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    bool operator==(const WindowInterval&) const = default;
};

/// Rows whose window intersects an interval become malicious, all others benign.
/// Intervals outside the matrix time range are ignored and reported in `warnings`.
FeatureMatrix assign_labels(FeatureMatrix matrix, std::span<const WindowInterval> intervals,
                            std::vector<std::string>* warnings = nullptr);

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);
void write_feature_csv_file(const std::string& path, const FeatureMatrix& matrix);
FeatureMatrix read_feature_csv(std::istream& in);
FeatureMatrix read_feature_csv_file(const std::string& path);

}  // namespace portshare
