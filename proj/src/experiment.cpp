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

#include "portshare/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "portshare/errors.hpp"
#include "portshare/features.hpp"
#include "portshare/forest.hpp"
#include "portshare/text.hpp"

namespace portshare {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::int64_t kDay = 86400;

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t base, std::uint64_t seed, std::uint64_t tag)
{
    return splitmix(base ^ splitmix(seed ^ splitmix(tag)));
}

enum Tag : std::uint64_t { kTagBenign = 1, kTagScanA = 2, kTagScanB = 3, kTagSlow = 4, kTagForest = 5 };

SiteConfig site_config(const ScenarioConfig& c)
{
    SiteConfig site;
    for (const auto& cidr : c.internal_cidrs) site.internal_prefixes.push_back(CidrPrefix::parse(cidr));
    site.monitored_ports = c.attack.ports;
    site.window_seconds = c.window_seconds;
    return site;
}

struct SiteData {
    std::map<std::uint16_t, FeatureMatrix> train;
    SeenIpState seen_after_train;
    std::map<std::uint16_t, EnsembleModel> models;
};

SiteData train_site(const ScenarioConfig& c, const BenignProfile& profile, const SiteConfig& site)
{
    SiteData d;
    const std::int64_t begin = c.t0;
    const std::int64_t end = c.t0 + c.train_days * kDay;
    FeaturizeOptions opt;
    opt.range_begin = begin;
    opt.range_end = end;
    {
        auto records = gen_benign(profile, begin, end, c.window_seconds);
        d.train = featurize(records, site, d.seen_after_train, opt);
    }
    for (auto port : c.attack.ports) d.models.emplace(port, fit_ensemble(d.train.at(port)));
    return d;
}

/// Scan traffic on every attacked port, positioned relative to the start of the test range.
std::vector<ConnRecord> scan_traffic(const ScenarioConfig& c, std::uint64_t seed, std::uint64_t tag)
{
    std::vector<ConnRecord> all;
    for (auto port : c.attack.ports) {
        ScanProfile s;
        s.port = port;
        s.rate = c.attack.rate;
        s.infected_hosts = c.attack.infected_hosts;
        s.length_windows = c.attack.windows;
        s.window_seconds = c.window_seconds;
        s.start = 0;
        s.rng_seed = derive(port, seed, tag);
        auto part = gen_scan(s);
        all.insert(all.end(), part.begin(), part.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const ConnRecord& a, const ConnRecord& b) { return a.ts < b.ts; });
    return all;
}

struct TestDay {
    std::map<std::uint16_t, FeatureMatrix> matrices;
    std::map<std::uint16_t, Truth> truth;
};

TestDay test_day(const ScenarioConfig& c, const std::vector<ConnRecord>& benign,
                 const std::vector<ConnRecord>& attack, const SiteConfig& site, SeenIpState seen,
                 std::vector<std::string>& diagnostics)
{
    const std::int64_t begin = c.t0 + c.train_days * kDay;
    auto injected = inject(benign, attack, static_cast<double>(begin + c.attack.offset_seconds), c.window_seconds);
    for (auto& w : injected.warnings) diagnostics.push_back(std::move(w));

    FeaturizeOptions opt;
    opt.range_begin = begin;
    opt.range_end = begin + c.test_days * kDay;
    TestDay t;
    t.matrices = featurize(injected.records, site, seen, opt);
    for (auto& [port, m] : t.matrices) {
        static const std::vector<WindowInterval> none;
        auto it = injected.intervals.find(port);
        m = assign_labels(std::move(m), it == injected.intervals.end() ? none : it->second);
        Truth truth;
        for (std::size_t i = 0; i < m.size(); ++i) truth[m.window_starts[i]] = m.labels[i] == Label::malicious;
        t.truth[port] = std::move(truth);
    }
    return t;
}

std::string package_key(std::uint64_t seed, std::uint16_t port, PackageKind kind)
{
    return "seed" + std::to_string(seed) + "/port" + std::to_string(port) + "/" + std::string(to_string(kind));
}

bool wants(const ScenarioConfig& c, Strategy s)
{
    return std::find(c.strategies.begin(), c.strategies.end(), s) != c.strategies.end();
}

ojson profile_or_path(const ojson& j, const std::string& key, const std::string& base_dir,
                      const BenignProfile& fallback)
{
    if (!j.contains(key)) return to_json(fallback);
    const auto& v = j.at(key);
    if (v.is_string()) {
        fs::path p = v.get<std::string>();
        if (p.is_relative()) p = fs::path(base_dir) / p;
        return to_json(load_benign_profile(p.string()));
    }
    return v;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void ScenarioConfig::validate() const
{
    net_a.validate();
    net_b.validate();
    if (train_days < 1 || test_days < 1) throw ConfigError("scenario: train_days and test_days must be >= 1");
    if (window_seconds < 1 || kDay % window_seconds != 0)
        throw ConfigError("scenario: window_seconds must divide one day");
    if (t0 % window_seconds != 0) throw ConfigError("scenario: t0 must be window-aligned");
    if (attack.ports.empty()) throw ConfigError("scenario: no attack ports");
    const SiteConfig monitored;
    for (auto p : attack.ports) {
        if (std::find(monitored.monitored_ports.begin(), monitored.monitored_ports.end(), p) ==
            monitored.monitored_ports.end())
            throw ConfigError("scenario: port " + std::to_string(p) + " is not monitored");
        auto has = [p](const BenignProfile& b) {
            return std::any_of(b.ports.begin(), b.ports.end(), [p](const PortProfile& pp) { return pp.port == p; });
        };
        if (!has(net_a) || !has(net_b)) throw ConfigError("scenario: port " + std::to_string(p) + " missing from a profile");
    }
    if (!(attack.rate > 0.0) || !(attack.slow_factor >= 1.0) || attack.windows < 1)
        throw ConfigError("scenario: invalid attack parameters");
    if (attack.offset_seconds < 0 ||
        attack.offset_seconds + static_cast<std::int64_t>(attack.windows) * window_seconds > test_days * kDay)
        throw ConfigError("scenario: attack does not fit in the test range");
    if (attack.offset_seconds % window_seconds != 0) throw ConfigError("scenario: attack offset must be window-aligned");
    for (const auto& v : variants)
        if (v != "fast" && v != "slow") throw ConfigError("scenario: unknown variant " + v);
    if (variants.empty() || strategies.empty() || seeds.empty()) throw ConfigError("scenario: nothing to run");
    if (adapt_k < 1) throw ConfigError("scenario: adapt_k must be >= 1");
    if (distance == DistanceMethod::emd) throw ConfigError("scenario: emd needs raw features and cannot be shared");
    if (forest_trees < 1) throw ConfigError("scenario: forest_trees must be >= 1");
    if (!(label_quantile > 0.0 && label_quantile < 1.0)) throw ConfigError("scenario: label_quantile must be in (0,1)");
    for (auto k : report_k)
        if (k == 0 || k > static_cast<std::size_t>(test_days * kDay / window_seconds))
            throw ConfigError("scenario: report k out of range");
    for (const auto& cidr : internal_cidrs) CidrPrefix::parse(cidr);
}

ojson to_json(const ScenarioConfig& c)
{
    ojson j;
    j["net_a"] = to_json(c.net_a);
    j["net_b"] = to_json(c.net_b);
    j["t0"] = c.t0;
    j["train_days"] = c.train_days;
    j["test_days"] = c.test_days;
    j["window_seconds"] = c.window_seconds;
    j["internal_cidrs"] = c.internal_cidrs;
    j["attack"] = {{"ports", c.attack.ports},
                   {"rate", c.attack.rate},
                   {"slow_factor", c.attack.slow_factor},
                   {"windows", c.attack.windows},
                   {"offset_seconds", c.attack.offset_seconds},
                   {"infected_hosts", c.attack.infected_hosts}};
    j["variants"] = c.variants;
    ojson strategies = ojson::array();
    for (auto s : c.strategies) strategies.push_back(std::string(to_string(s)));
    j["strategies"] = std::move(strategies);
    j["adapt_k"] = c.adapt_k;
    j["distance"] = std::string(to_string(c.distance));
    j["forest"] = {{"n_trees", c.forest_trees}, {"seed", c.forest_seed}};
    j["label_quantile"] = c.label_quantile;
    j["seeds"] = c.seeds;
    j["report_k"] = c.report_k;
    j["write_model_packages"] = c.write_model_packages;
    return j;
}

ScenarioConfig scenario_from_json(const ojson& j, const std::string& base_dir)
{
    try {
        ScenarioConfig c;
        c.net_a = benign_profile_from_json(profile_or_path(j, "net_a", base_dir, c.net_a));
        c.net_b = benign_profile_from_json(profile_or_path(j, "net_b", base_dir, c.net_b));
        c.t0 = j.value("t0", c.t0);
        c.train_days = j.value("train_days", c.train_days);
        c.test_days = j.value("test_days", c.test_days);
        c.window_seconds = j.value("window_seconds", c.window_seconds);
        c.internal_cidrs = j.value("internal_cidrs", c.internal_cidrs);
        if (j.contains("attack")) {
            const auto& a = j.at("attack");
            c.attack.ports = a.value("ports", c.attack.ports);
            c.attack.rate = a.value("rate", c.attack.rate);
            c.attack.slow_factor = a.value("slow_factor", c.attack.slow_factor);
            c.attack.windows = a.value("windows", c.attack.windows);
            c.attack.offset_seconds = a.value("offset_seconds", c.attack.offset_seconds);
            c.attack.infected_hosts = a.value("infected_hosts", c.attack.infected_hosts);
        }
        c.variants = j.value("variants", c.variants);
        if (j.contains("strategies")) {
            c.strategies.clear();
            for (const auto& s : j.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
        }
        c.adapt_k = j.value("adapt_k", c.adapt_k);
        if (j.contains("distance")) c.distance = parse_distance_method(j.at("distance").get<std::string>());
        if (j.contains("forest")) {
            c.forest_trees = j.at("forest").value("n_trees", c.forest_trees);
            c.forest_seed = j.at("forest").value("seed", c.forest_seed);
        }
        c.label_quantile = j.value("label_quantile", c.label_quantile);
        c.seeds = j.value("seeds", c.seeds);
        c.report_k = j.value("report_k", c.report_k);
        c.write_model_packages = j.value("write_model_packages", c.write_model_packages);
        c.validate();
        return c;
    } catch (const ojson::exception& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }
}

ScenarioConfig load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario config: " + path);
    auto j = ojson::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("scenario config is not valid JSON: " + path);
    return scenario_from_json(j, fs::path(path).parent_path().string());
}

std::uint64_t config_hash(const ScenarioConfig& c)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

double NetACheck::accuracy() const
{
    return windows == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(windows);
}

NetACheck detection_accuracy(const DetectionLabels& labels, const Truth& truth)
{
    NetACheck chk;
    chk.threshold = labels.threshold;
    chk.windows = labels.window_starts.size();
    for (std::size_t i = 0; i < labels.window_starts.size(); ++i) {
        auto it = truth.find(labels.window_starts[i]);
        const bool actual = it != truth.end() && it->second;
        const bool flagged = labels.labels[i] == Label::malicious;
        chk.attack_windows += actual;
        chk.flagged += flagged;
        chk.correct += actual == flagged;
    }
    return chk;
}

bool net_a_selfcheck(const std::vector<NetACheck>& checks)
{
    if (checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const NetACheck& c) { return c.accuracy() > 0.96; });
}

ScenarioResult run_scenario(const ScenarioConfig& config)
{
    config.validate();
    const SiteConfig site = site_config(config);
    const std::int64_t test_begin = config.t0 + config.train_days * kDay;
    const std::int64_t test_end = test_begin + config.test_days * kDay;
    const bool need_packages = wants(config, Strategy::model_sharing) || wants(config, Strategy::weight_sharing) ||
                               wants(config, Strategy::weight_adaptation);
    const bool need_weights = wants(config, Strategy::weight_sharing) || wants(config, Strategy::weight_adaptation);

    ScenarioResult result;
    for (std::uint64_t seed : config.seeds) {
        BenignProfile prof_a = config.net_a;
        BenignProfile prof_b = config.net_b;
        prof_a.rng_seed = derive(config.net_a.rng_seed, seed, kTagBenign);
        prof_b.rng_seed = derive(config.net_b.rng_seed, seed, kTagBenign);

        // Net-A: train, detect its own fast attack, derive what it shares.
        std::map<std::uint16_t, SharePackage> received;  // model packages by port
        std::map<std::uint16_t, SharePackage> received_weights;
        std::map<std::uint16_t, SharePackage> received_adaptive;
        if (need_packages) {
            SiteData a = train_site(config, prof_a, site);
            TestDay day = test_day(config, gen_benign(prof_a, test_begin, test_end, config.window_seconds),
                                   scan_traffic(config, seed, kTagScanA), site, a.seen_after_train,
                                   result.diagnostics);
            for (auto port : config.attack.ports) {
                const auto& model = a.models.at(port);
                const auto& test = day.matrices.at(port);
                const auto ranking = rank_alerts(model, test);
                const auto labels = label_by_detection(ranking, model, config.label_quantile);
                NetACheck chk = detection_accuracy(labels, day.truth.at(port));
                chk.seed = seed;
                chk.port = port;
                result.net_a.push_back(chk);

                auto put = [&](std::map<std::uint16_t, SharePackage>& into, const SharePackage& pkg) {
                    std::string bytes = export_package(pkg);
                    into.emplace(port, import_package(bytes));
                    if (pkg.kind != PackageKind::model || config.write_model_packages)
                        result.packages[package_key(seed, port, pkg.kind)] = std::move(bytes);
                };
                if (wants(config, Strategy::model_sharing)) put(received, make_model_package(prof_a.site_id, model));
                if (!need_weights) continue;

                if (labels.malicious() == 0) {
                    result.diagnostics.push_back("seed " + std::to_string(seed) + " port " + std::to_string(port) +
                                                 ": Net-A detection labeled no window malicious; weight sharing skipped");
                    continue;
                }
                FeatureMatrix labeled = test;
                labeled.labels = labels.labels;
                ForestConfig fc;
                fc.n_trees = config.forest_trees;
                fc.rng_seed = derive(config.forest_seed, seed, kTagForest + port);
                WeightVector weights;
                try {
                    weights = feature_weights(train_forest(labeled, fc));
                } catch (const Error& e) {
                    result.diagnostics.push_back("seed " + std::to_string(seed) + " port " + std::to_string(port) +
                                                 ": " + e.what() + "; weight sharing skipped");
                    continue;
                }
                put(received_weights, make_weights_package(prof_a.site_id, port, weights));
                put(received_adaptive,
                    make_adaptive_package(prof_a.site_id, port, weights, compute_moments(a.train.at(port))));
            }
        }

        // Net-B: train its own models, then face the fast and slow variants.
        SiteData b = train_site(config, prof_b, site);
        std::map<std::uint16_t, MomentSummary> moments_b;
        for (auto port : config.attack.ports) moments_b.emplace(port, compute_moments(b.train.at(port)));
        const auto benign_b = gen_benign(prof_b, test_begin, test_end, config.window_seconds);
        const auto fast_b = scan_traffic(config, seed, kTagScanB);

        for (const auto& variant : config.variants) {
            const auto attack = variant == "fast"
                                    ? fast_b
                                    : slow_variant(fast_b, config.attack.slow_factor, derive(0, seed, kTagSlow));
            TestDay day = test_day(config, benign_b, attack, site, b.seen_after_train, result.diagnostics);
            for (auto port : config.attack.ports) {
                const auto& test = day.matrices.at(port);
                const auto& truth = day.truth.at(port);
                if (count_malicious(truth) == 0) {
                    result.diagnostics.push_back("seed " + std::to_string(seed) + " port " + std::to_string(port) +
                                                 " " + variant + ": no attack window survived; not evaluated");
                    continue;
                }
                const auto& model_b = b.models.at(port);
                const NormalizedScores scores_b = normalized_scores(model_b, test);
                auto emit = [&](Strategy s, const AlertRanking& r) {
                    result.reports.push_back(evaluate(r, truth, s, variant, seed, config.report_k));
                };
                for (Strategy s : config.strategies) {
                    switch (s) {
                    case Strategy::baseline:
                        emit(s, rank_alerts(scores_b, test, model_b.weights));
                        break;
                    case Strategy::model_sharing:
                        emit(s, rank_alerts(*received.at(port).model, test));
                        break;
                    case Strategy::weight_sharing:
                        if (auto it = received_weights.find(port); it != received_weights.end())
                            emit(s, rank_alerts(scores_b, test, *it->second.weights));
                        break;
                    case Strategy::weight_adaptation:
                        if (auto it = received_adaptive.find(port); it != received_adaptive.end()) {
                            const auto& pkg = it->second;
                            const auto dist = moment_distance(*pkg.moments, moments_b.at(port), config.distance);
                            std::vector<std::string> warnings;
                            const auto adapted = adapt_weights(*pkg.weights, dist, config.adapt_k, &warnings);
                            for (auto& w : warnings) result.diagnostics.push_back(std::move(w));
                            emit(s, rank_alerts(scores_b, test, adapted));
                        }
                        break;
                    }
                }
            }
        }
    }
    return result;
}

void write_run(const std::string& dir, const ScenarioConfig& config, const ScenarioResult& result)
{
    const fs::path root(dir);
    fs::create_directories(root);

    ojson manifest;
    manifest["tool"] = "portshare";
    manifest["version"] = kVersion;
    manifest["config_hash"] = [&] {
        std::ostringstream s;
        s << std::hex << config_hash(config);
        return s.str();
    }();
    manifest["seeds"] = config.seeds;
    manifest["ports"] = config.attack.ports;
    manifest["variants"] = config.variants;
    manifest["reports"] = result.reports.size();
    manifest["net_a_selfcheck"] = net_a_selfcheck(result.net_a);
    manifest["diagnostics"] = result.diagnostics;
    write_text(root / "manifest.json", manifest.dump(2) + "\n");
    write_text(root / "config.json", to_json(config).dump(2) + "\n");

    std::ostringstream reports, curves, comparison, selfcheck;
    write_reports_csv(reports, result.reports);
    write_curves_csv(curves, result.reports);
    const auto cmp = compare_strategies(result.reports);
    write_comparison_csv(comparison, cmp);
    write_text(root / "reports.csv", reports.str());
    write_text(root / "curves.csv", curves.str());
    write_text(root / "comparison.csv", comparison.str());
    for (const auto& variant : config.variants) {
        for (auto k : config.report_k) {
            std::ostringstream precision, fp;
            write_metric_table(precision, cmp, variant, k, false);
            write_metric_table(fp, cmp, variant, k, true);
            write_text(root / ("precision_at_" + std::to_string(k) + "_" + variant + ".csv"), precision.str());
            write_text(root / ("fp_at_" + std::to_string(k) + "_" + variant + ".csv"), fp.str());
        }
    }

    selfcheck << "seed,port,windows,attack_windows,flagged,correct,threshold,accuracy\n";
    for (const auto& c : result.net_a)
        selfcheck << c.seed << ',' << c.port << ',' << c.windows << ',' << c.attack_windows << ',' << c.flagged << ','
                  << c.correct << ',' << text::format_double(c.threshold) << ','
                  << text::format_double(c.accuracy()) << '\n';
    write_text(root / "selfcheck.csv", selfcheck.str());

    for (const auto& [key, bytes] : result.packages) {
        const fs::path p = root / "packages" / (key + ".json");
        fs::create_directories(p.parent_path());
        write_text(p, bytes);
    }
}

}  // namespace portshare
