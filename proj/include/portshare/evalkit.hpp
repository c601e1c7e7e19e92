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

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "portshare/ensemble.hpp"

namespace portshare {

enum class Strategy { baseline, model_sharing, weight_sharing, weight_adaptation };
inline constexpr Strategy kAllStrategies[] = {Strategy::baseline, Strategy::model_sharing,
                                              Strategy::weight_sharing, Strategy::weight_adaptation};
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Ground truth keyed by window start; absent windows are benign.
using Truth = std::map<std::int64_t, bool>;

struct PrecisionFp {
    double precision = 0.0;
    std::size_t fp = 0;
};

/// Hits among the first k entries of the ranking.
std::size_t true_positives_at_k(const AlertRanking& ranking, const Truth& truth, std::size_t k);
std::size_t count_malicious(const Truth& truth);
double recall_at_k(const AlertRanking& ranking, const Truth& truth, std::size_t k);
PrecisionFp precision_fp_at_k(const AlertRanking& ranking, const Truth& truth, std::size_t k);

/// Truncates to two decimals, tolerating representation error just below a step.
double truncate2(double x);

struct EvalReport {
    std::uint16_t port = 0;
    Strategy strategy = Strategy::baseline;
    std::string variant = "fast";
    std::size_t m = 0;
    std::vector<double> recall;  ///< recall[k-1] for k = 1..N
    std::map<std::size_t, PrecisionFp> at_k;
    std::uint64_t seed = 0;

    double recall_at(std::size_t k) const;
    void validate() const;
};

EvalReport evaluate(const AlertRanking& ranking, const Truth& truth, Strategy strategy,
                    std::string variant, std::uint64_t seed, std::span<const std::size_t> ks = {});

struct ComparisonRow {
    std::string port;  ///< port number, or "mean" for the average over ports
    Strategy strategy = Strategy::baseline;
    std::string variant;
    std::size_t seeds = 0;
    double recall_at_m = 0.0;  ///< recall at k = m, mean over seeds
    double recall_at_m_sd = 0.0;
    std::map<std::size_t, double> precision;  ///< mean over seeds
    std::map<std::size_t, double> fp;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    /// Mean recall curve per (port, strategy, variant) over seeds.
    std::map<std::string, std::vector<double>> curves;
};

Comparison compare_strategies(std::span<const EvalReport> reports);

void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports);
void write_comparison_csv(std::ostream& out, const Comparison& cmp);
/// Columns `port,strategy,variant,k,recall`; each curve carries its m as a marker column.
void write_curves_csv(std::ostream& out, std::span<const EvalReport> reports);
/// Metric table: one row per strategy, one column per port.
void write_metric_table(std::ostream& out, const Comparison& cmp, std::string_view variant,
                        std::size_t k, bool false_positives);
void write_curve_csv(std::ostream& out, const EvalReport& report);

/// CSV with header `window_start,label`; label is malicious/benign or 1/0.
Truth read_truth_csv(std::istream& in);
Truth read_truth_csv_file(const std::string& path);
void write_truth_csv(std::ostream& out, const FeatureMatrix& matrix);

}  // namespace portshare
