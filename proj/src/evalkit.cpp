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

#include "portshare/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "portshare/errors.hpp"
#include "portshare/text.hpp"

namespace portshare {

using text::format_double;
using text::parse_int;
using text::split;

namespace {

constexpr std::string_view kStrategyNames[] = {"baseline", "model_sharing", "weight_sharing",
                                               "weight_adaptation"};

bool is_malicious(const Truth& truth, std::int64_t w)
{
    auto it = truth.find(w);
    return it != truth.end() && it->second;
}

void check_k(const AlertRanking& ranking, std::size_t k)
{
    if (k == 0) throw ValidationError("k must be at least 1");
    if (k > ranking.entries.size())
        throw ValidationError("k = " + std::to_string(k) + " exceeds ranking length " +
                              std::to_string(ranking.entries.size()));
}

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::string_view to_string(Strategy s) { return kStrategyNames[static_cast<int>(s)]; }

Strategy parse_strategy(std::string_view s)
{
    for (std::size_t i = 0; i < std::size(kStrategyNames); ++i)
        if (kStrategyNames[i] == s) return static_cast<Strategy>(i);
    throw ConfigError("unknown strategy: " + std::string(s));
}

std::size_t count_malicious(const Truth& truth)
{
    return static_cast<std::size_t>(
        std::count_if(truth.begin(), truth.end(), [](const auto& kv) { return kv.second; }));
}

std::size_t true_positives_at_k(const AlertRanking& ranking, const Truth& truth, std::size_t k)
{
    check_k(ranking, k);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) tp += is_malicious(truth, ranking.entries[i].window_start);
    return tp;
}

double recall_at_k(const AlertRanking& ranking, const Truth& truth, std::size_t k)
{
    const std::size_t m = count_malicious(truth);
    if (m == 0) throw ValidationError("recall is undefined without malicious windows");
    return static_cast<double>(true_positives_at_k(ranking, truth, k)) / static_cast<double>(m);
}

PrecisionFp precision_fp_at_k(const AlertRanking& ranking, const Truth& truth, std::size_t k)
{
    const std::size_t tp = true_positives_at_k(ranking, truth, k);
    return {static_cast<double>(tp) / static_cast<double>(k), k - tp};
}

double truncate2(double x) { return std::floor(x * 100.0 + 1e-9) / 100.0; }

double EvalReport::recall_at(std::size_t k) const
{
    if (k == 0 || k > recall.size()) throw ValidationError("recall_at: k out of range");
    return recall[k - 1];
}

void EvalReport::validate() const
{
    if (m == 0) throw ValidationError("report has no malicious windows");
    double prev = 0.0;
    for (double r : recall) {
        if (!(r >= prev) || r > 1.0) throw ValidationError("recall curve must be non-decreasing in [0,1]");
        prev = r;
    }
    for (const auto& [k, pf] : at_k) {
        if (pf.precision < 0.0 || pf.precision > 1.0) throw ValidationError("precision out of [0,1]");
        if (pf.fp > k) throw ValidationError("false positives exceed k");
    }
}

EvalReport evaluate(const AlertRanking& ranking, const Truth& truth, Strategy strategy,
                    std::string variant, std::uint64_t seed, std::span<const std::size_t> ks)
{
    EvalReport r;
    r.port = ranking.port;
    r.strategy = strategy;
    r.variant = std::move(variant);
    r.seed = seed;
    r.m = count_malicious(truth);
    if (r.m == 0) throw ValidationError("evaluate: truth has no malicious windows");

    std::size_t tp = 0;
    r.recall.reserve(ranking.entries.size());
    for (const auto& e : ranking.entries) {
        tp += is_malicious(truth, e.window_start);
        r.recall.push_back(static_cast<double>(tp) / static_cast<double>(r.m));
    }
    static constexpr std::size_t kDefaultK[] = {60};
    if (ks.empty()) ks = kDefaultK;
    for (std::size_t k : ks) r.at_k[k] = precision_fp_at_k(ranking, truth, k);
    return r;
}

Comparison compare_strategies(std::span<const EvalReport> reports)
{
    using Key = std::tuple<std::string, std::uint16_t, int>;  // variant, port, strategy
    std::map<Key, std::vector<const EvalReport*>> groups;
    for (const auto& r : reports) groups[{r.variant, r.port, static_cast<int>(r.strategy)}].push_back(&r);

    // Every group of one variant must cover the same seeds, and every report the same k set.
    std::map<std::string, std::set<std::uint64_t>> variant_seeds;
    std::set<std::size_t> ks;
    if (!reports.empty())
        for (const auto& [k, _] : reports.front().at_k) ks.insert(k);
    for (const auto& [key, group] : groups) {
        std::set<std::uint64_t> seeds;
        for (const auto* r : group) {
            if (!seeds.insert(r->seed).second)
                throw ValidationError("duplicate report for seed " + std::to_string(r->seed));
            std::set<std::size_t> rk;
            for (const auto& [k, _] : r->at_k) rk.insert(k);
            if (rk != ks) throw ValidationError("reports use different k values");
        }
        auto [it, fresh] = variant_seeds.emplace(std::get<0>(key), seeds);
        if (!fresh && it->second != seeds) throw ValidationError("reports cover different seeds");
    }

    Comparison cmp;
    std::map<std::tuple<std::string, int>, std::vector<const ComparisonRow*>> by_strategy;
    for (const auto& [key, group] : groups) {
        const auto& [variant, port, strategy] = key;
        ComparisonRow row;
        row.port = std::to_string(port);
        row.strategy = static_cast<Strategy>(strategy);
        row.variant = variant;
        row.seeds = group.size();
        const double n = static_cast<double>(group.size());
        std::vector<double> at_m;
        std::size_t len = group.front()->recall.size();
        for (const auto* r : group) len = std::min(len, r->recall.size());
        std::vector<double> curve(len, 0.0);
        for (const auto* r : group) {
            at_m.push_back(r->recall_at(std::min(r->m, r->recall.size())));
            for (std::size_t i = 0; i < len; ++i) curve[i] += r->recall[i] / n;
            for (const auto& [k, pf] : r->at_k) {
                row.precision[k] += pf.precision / n;
                row.fp[k] += static_cast<double>(pf.fp) / n;
            }
        }
        for (double v : at_m) row.recall_at_m += v / n;
        double ss = 0.0;
        for (double v : at_m) ss += (v - row.recall_at_m) * (v - row.recall_at_m);
        row.recall_at_m_sd = group.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        cmp.curves[variant + "/" + row.port + "/" + std::string(to_string(row.strategy))] = std::move(curve);
        cmp.rows.push_back(std::move(row));
    }
    for (const auto& row : cmp.rows) by_strategy[{row.variant, static_cast<int>(row.strategy)}].push_back(&row);

    std::vector<ComparisonRow> means;
    for (const auto& [key, rows] : by_strategy) {
        if (rows.size() < 2) continue;
        ComparisonRow mean;
        mean.port = "mean";
        mean.variant = std::get<0>(key);
        mean.strategy = static_cast<Strategy>(std::get<1>(key));
        mean.seeds = rows.front()->seeds;
        const double n = static_cast<double>(rows.size());
        for (const auto* r : rows) {
            mean.recall_at_m += r->recall_at_m / n;
            for (const auto& [k, v] : r->precision) mean.precision[k] += v / n;
            for (const auto& [k, v] : r->fp) mean.fp[k] += v / n;
        }
        means.push_back(std::move(mean));
    }
    cmp.rows.insert(cmp.rows.end(), means.begin(), means.end());
    return cmp;
}

void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports)
{
    out << "port,strategy,variant,seed,m,recall_at_m,k,precision,fp\n";
    for (const auto& r : reports) {
        const std::string head = std::to_string(r.port) + "," + std::string(to_string(r.strategy)) + "," +
                                 r.variant + "," + std::to_string(r.seed) + "," + std::to_string(r.m) + "," +
                                 format_double(r.recall_at(std::min(r.m, r.recall.size())));
        for (const auto& [k, pf] : r.at_k)
            out << head << ',' << k << ',' << format_double(pf.precision) << ',' << pf.fp << '\n';
    }
}

void write_comparison_csv(std::ostream& out, const Comparison& cmp)
{
    out << "variant,port,strategy,seeds,recall_at_m,recall_at_m_sd,k,precision,fp\n";
    for (const auto& row : cmp.rows) {
        for (const auto& [k, p] : row.precision) {
            out << row.variant << ',' << row.port << ',' << to_string(row.strategy) << ',' << row.seeds << ','
                << format_double(row.recall_at_m) << ',' << format_double(row.recall_at_m_sd) << ',' << k
                << ',' << format_double(p) << ',' << format_double(row.fp.at(k)) << '\n';
        }
    }
}

void write_curves_csv(std::ostream& out, std::span<const EvalReport> reports)
{
    out << "port,strategy,variant,seed,m,k,recall\n";
    for (const auto& r : reports)
        for (std::size_t k = 1; k <= r.recall.size(); ++k)
            out << r.port << ',' << to_string(r.strategy) << ',' << r.variant << ',' << r.seed << ',' << r.m
                << ',' << k << ',' << format_double(r.recall[k - 1]) << '\n';
}

void write_curve_csv(std::ostream& out, const EvalReport& report)
{
    out << "k,recall\n";
    for (std::size_t k = 1; k <= report.recall.size(); ++k)
        out << k << ',' << format_double(report.recall[k - 1]) << '\n';
}

void write_metric_table(std::ostream& out, const Comparison& cmp, std::string_view variant,
                        std::size_t k, bool false_positives)
{
    std::vector<std::string> ports;
    std::map<int, std::map<std::string, double>> cells;
    for (const auto& row : cmp.rows) {
        if (row.variant != variant || row.port == "mean") continue;
        if (std::find(ports.begin(), ports.end(), row.port) == ports.end()) ports.push_back(row.port);
        const auto& src = false_positives ? row.fp : row.precision;
        auto it = src.find(k);
        if (it == src.end()) throw ValidationError("no metrics recorded at k = " + std::to_string(k));
        cells[static_cast<int>(row.strategy)][row.port] = false_positives ? it->second : truncate2(it->second);
    }
    out << "strategy";
    for (const auto& p : ports) out << ",port_" << p;
    out << '\n';
    for (const auto& [s, by_port] : cells) {
        out << to_string(static_cast<Strategy>(s));
        for (const auto& p : ports) {
            out << ',';
            if (auto it = by_port.find(p); it != by_port.end()) out << format_double(it->second);
        }
        out << '\n';
    }
}

Truth read_truth_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "window_start,label")
        throw ValidationError("truth CSV must start with header window_start,label");
    Truth truth;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 2) throw ValidationError("truth CSV line " + std::to_string(lineno) + ": expected 2 fields");
        auto w = parse_int(fields[0]);
        if (!w) throw ValidationError("truth CSV line " + std::to_string(lineno) + ": bad window_start");
        bool mal;
        if (fields[1] == "malicious" || fields[1] == "1") mal = true;
        else if (fields[1] == "benign" || fields[1] == "0" || fields[1] == "unlabeled") mal = false;
        else throw ValidationError("truth CSV line " + std::to_string(lineno) + ": bad label");
        if (!truth.emplace(*w, mal).second)
            throw ValidationError("truth CSV line " + std::to_string(lineno) + ": duplicate window");
    }
    return truth;
}

Truth read_truth_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth file: " + path);
    return read_truth_csv(in);
}

void write_truth_csv(std::ostream& out, const FeatureMatrix& matrix)
{
    out << "window_start,label\n";
    for (std::size_t i = 0; i < matrix.size(); ++i)
        out << matrix.window_starts[i] << ',' << (matrix.labels[i] == Label::malicious ? "malicious" : "benign")
            << '\n';
}

}  // namespace portshare
