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

// Command-line front end for the portshare library.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "portshare/conn_ingest.hpp"
#include "portshare/ensemble.hpp"
#include "portshare/errors.hpp"
#include "portshare/evalkit.hpp"
#include "portshare/experiment.hpp"
#include "portshare/features.hpp"
#include "portshare/forest.hpp"
#include "portshare/harness.hpp"
#include "portshare/sharing.hpp"
#include "portshare/text.hpp"

using namespace portshare;

namespace {

/// Truth from a `window_start,label` CSV or from a labeled features CSV.
Truth load_truth(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth file: " + path);
    std::string header;
    std::getline(in, header);
    if (!header.starts_with("window_start,port,label")) return read_truth_csv_file(path);
    const auto m = read_feature_csv_file(path);
    Truth truth;
    for (std::size_t i = 0; i < m.size(); ++i) truth[m.window_starts[i]] = m.labels[i] == Label::malicious;
    return truth;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

SiteConfig make_site(const std::vector<std::string>& cidrs, const std::string& token_file, int window)
{
    SiteConfig site;
    for (const auto& c : cidrs) site.internal_prefixes.push_back(CidrPrefix::parse(c));
    if (!token_file.empty()) {
        std::ifstream in(token_file);
        if (!in) throw IoError("cannot open token file: " + token_file);
        for (std::string line; std::getline(in, line);) {
            auto t = text::trim(line);
            if (!t.empty()) site.internal_tokens.emplace(t);
        }
    }
    site.window_seconds = window;
    site.validate();
    return site;
}

std::vector<WindowInterval> read_intervals(const std::string& path, std::uint16_t port)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open intervals: " + path);
    std::string line;
    std::getline(in, line);
    if (text::trim(line) != "port,begin,end") throw ValidationError("intervals CSV must start with port,begin,end");
    std::vector<WindowInterval> out;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        auto f = text::split(text::trim(line), ',');
        auto p = f.size() == 3 ? text::parse_uint(f[0]) : std::nullopt;
        auto b = f.size() == 3 ? text::parse_int(f[1]) : std::nullopt;
        auto e = f.size() == 3 ? text::parse_int(f[2]) : std::nullopt;
        if (!p || !b || !e) throw ValidationError("bad intervals line: " + line);
        if (*p == port) out.push_back({*b, *e});
    }
    return out;
}

BenignProfile profile_arg(const std::string& name)
{
    if (name == "net-a") return default_profile_net_a();
    if (name == "net-b") return default_profile_net_b();
    return load_benign_profile(name);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Per-port anomaly detection with shared weights and models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // featurize
    auto* featurize_cmd = app.add_subcommand("featurize", "Aggregate a conn log into per-window features");
    std::string f_input, f_format = "auto", f_out, f_labels, f_history, f_tokens;
    std::vector<std::string> f_cidrs{"10.0.0.0/8"};
    int f_port = 23, f_window = 60;
    std::optional<std::int64_t> f_begin, f_end;
    featurize_cmd->add_option("--input", f_input, "conn log (TSV or JSON lines)")->required();
    featurize_cmd->add_option("--format", f_format)->check(CLI::IsMember({"auto", "tsv", "jsonl"}));
    featurize_cmd->add_option("--internal-cidr", f_cidrs, "internal prefix, repeatable")->capture_default_str();
    featurize_cmd->add_option("--internal-tokens", f_tokens, "file of anonymized internal host tokens");
    featurize_cmd->add_option("--port", f_port)->required();
    featurize_cmd->add_option("--window", f_window);
    featurize_cmd->add_option("--begin", f_begin, "first window start (epoch seconds)");
    featurize_cmd->add_option("--end", f_end, "end of the last window (epoch seconds)");
    featurize_cmd->add_option("--history", f_history, "earlier log whose external peers count as seen");
    featurize_cmd->add_option("--labels", f_labels, "attack intervals CSV (port,begin,end)");
    featurize_cmd->add_option("--out", f_out)->required();

    // train / detect
    auto* train_cmd = app.add_subcommand("train", "Fit the Mean Ensemble on benign features");
    std::string t_features, t_out;
    train_cmd->add_option("--features", t_features)->required();
    train_cmd->add_option("--out", t_out)->required();

    auto* detect_cmd = app.add_subcommand("detect", "Rank test windows by ensemble score");
    std::string d_model, d_features, d_out, d_weights, d_labeled;
    double d_quantile = 0.999;
    detect_cmd->add_option("--model", d_model)->required();
    detect_cmd->add_option("--features", d_features)->required();
    detect_cmd->add_option("--out", d_out, "ranking CSV")->required();
    detect_cmd->add_option("--weights", d_weights, "weights CSV replacing the model's weights");
    detect_cmd->add_option("--labeled-out", d_labeled, "features CSV labeled by detection");
    detect_cmd->add_option("--quantile", d_quantile, "training-score quantile used as threshold");

    // weights
    auto* weights_cmd = app.add_subcommand("weights", "Derive feature weights from labeled windows");
    std::string w_features, w_out;
    std::uint64_t w_seed = 7;
    int w_trees = 100;
    weights_cmd->add_option("--features", w_features)->required();
    weights_cmd->add_option("--seed", w_seed);
    weights_cmd->add_option("--trees", w_trees);
    weights_cmd->add_option("--out", w_out)->required();

    // share
    auto* share_cmd = app.add_subcommand("share", "Export or import a share package");
    share_cmd->require_subcommand(1);
    auto* export_cmd = share_cmd->add_subcommand("export", "Build a package from local artifacts");
    std::string e_kind, e_site, e_model, e_weights, e_features, e_out;
    int e_port = 0;
    export_cmd->add_option("--kind", e_kind)->required()->check(CLI::IsMember({"model", "weights", "weights+moments"}));
    export_cmd->add_option("--site", e_site)->required();
    export_cmd->add_option("--port", e_port);
    export_cmd->add_option("--model", e_model);
    export_cmd->add_option("--weights", e_weights);
    export_cmd->add_option("--features", e_features, "training features for the moment summary");
    export_cmd->add_option("--out", e_out)->required();

    auto* import_cmd = share_cmd->add_subcommand("import", "Validate a package and derive local artifacts");
    std::string i_pkg, i_features, i_out, i_distance = "raw_moments";
    int i_k = 10;
    import_cmd->add_option("package", i_pkg)->required();
    import_cmd->add_option("--adapt-k", i_k);
    import_cmd->add_option("--distance", i_distance)->check(CLI::IsMember({"raw_moments", "scale_adjusted"}));
    import_cmd->add_option("--features", i_features, "local training features (needed to adapt)");
    import_cmd->add_option("--out", i_out, "weights CSV or model file")->required();

    // gen / gen-scan / inject
    auto* gen_cmd = app.add_subcommand("gen", "Generate benign traffic from a profile");
    std::string g_profile = "net-a", g_out;
    int g_days = 8;
    std::int64_t g_start = 1593561600;
    std::optional<std::uint64_t> g_seed;
    gen_cmd->add_option("--profile", g_profile, "profile JSON, or net-a / net-b");
    gen_cmd->add_option("--days", g_days);
    gen_cmd->add_option("--start", g_start);
    gen_cmd->add_option("--seed", g_seed);
    gen_cmd->add_option("--out", g_out)->required();

    auto* scan_cmd = app.add_subcommand("gen-scan", "Generate a scan trace starting at time 0");
    ScanProfile s_profile;
    std::string s_out, s_config;
    scan_cmd->add_option("--config", s_config, "scan profile JSON");
    scan_cmd->add_option("--port", s_profile.port);
    scan_cmd->add_option("--rate", s_profile.rate);
    scan_cmd->add_option("--windows", s_profile.length_windows);
    scan_cmd->add_option("--seed", s_profile.rng_seed);
    scan_cmd->add_option("--out", s_out)->required();

    auto* inject_cmd = app.add_subcommand("inject", "Merge an attack trace into benign traffic");
    std::string j_benign, j_attack, j_out, j_intervals;
    double j_slow = 1.0, j_offset = 0.0;
    std::uint64_t j_seed = 1;
    int j_window = 60;
    inject_cmd->add_option("--benign", j_benign)->required();
    inject_cmd->add_option("--attack", j_attack)->required();
    inject_cmd->add_option("--slow", j_slow, "retain each attack record with probability 1/factor");
    inject_cmd->add_option("--seed", j_seed, "seed for slow-variant sampling");
    inject_cmd->add_option("--offset", j_offset, "seconds added to attack timestamps");
    inject_cmd->add_option("--window", j_window);
    inject_cmd->add_option("--out", j_out)->required();
    inject_cmd->add_option("--intervals", j_intervals, "write attack window intervals CSV");

    // eval / run
    auto* eval_cmd = app.add_subcommand("eval", "Top-k metrics of a ranking against ground truth");
    std::string v_ranking, v_truth, v_out, v_curve, v_strategy = "baseline", v_variant = "fast";
    std::vector<std::size_t> v_k{60};
    eval_cmd->add_option("--ranking", v_ranking)->required();
    eval_cmd->add_option("--truth", v_truth, "window_start,label CSV or labeled features CSV")->required();
    eval_cmd->add_option("--k", v_k);
    eval_cmd->add_option("--strategy", v_strategy);
    eval_cmd->add_option("--variant", v_variant);
    eval_cmd->add_option("--out", v_out)->required();
    eval_cmd->add_option("--curve", v_curve, "write the k,recall series");

    auto* run_cmd = app.add_subcommand("run", "Run a full two-site scenario");
    std::string r_config, r_out;
    run_cmd->add_option("--config", r_config, "scenario JSON (defaults when omitted)");
    run_cmd->add_option("--out", r_out)->required();

    auto* defaults_cmd = app.add_subcommand("defaults", "Print a built-in profile or scenario as JSON");
    std::string x_what;
    defaults_cmd->add_option("what", x_what)->required()->check(CLI::IsMember({"net-a", "net-b", "scan", "scenario"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*featurize_cmd) {
            const auto fmt = parse_log_format(f_format);
            const SiteConfig site = make_site(f_cidrs, f_tokens, f_window);
            SeenIpState seen;
            if (!f_history.empty()) featurize(read_conn_log_file(f_history, fmt).records, site, seen);
            auto log = read_conn_log_file(f_input, fmt);
            if (log.skipped) std::cerr << "skipped " << log.skipped << " malformed lines\n";
            FeaturizeOptions opt;
            opt.range_begin = f_begin;
            opt.range_end = f_end;
            auto matrices = featurize(log.records, site, seen, opt);
            auto it = matrices.find(static_cast<std::uint16_t>(f_port));
            if (it == matrices.end()) throw ConfigError("port " + std::to_string(f_port) + " is not monitored");
            FeatureMatrix m = std::move(it->second);
            if (!f_labels.empty()) {
                std::vector<std::string> warnings;
                m = assign_labels(std::move(m), read_intervals(f_labels, m.port), &warnings);
                for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            }
            write_feature_csv_file(f_out, m);
        } else if (*train_cmd) {
            save_model(t_out, fit_ensemble(read_feature_csv_file(t_features)));
        } else if (*detect_cmd) {
            EnsembleModel model = load_model(d_model);
            if (!d_weights.empty()) model = with_weights(std::move(model), read_weights_csv_file(d_weights));
            FeatureMatrix m = read_feature_csv_file(d_features);
            const auto ranking = rank_alerts(model, m);
            write_ranking_csv_file(d_out, ranking);
            if (!d_labeled.empty()) {
                const auto labels = label_by_detection(ranking, model, d_quantile);
                m.labels = labels.labels;
                write_feature_csv_file(d_labeled, m);
                std::cerr << labels.malicious() << " of " << m.size() << " windows above threshold "
                          << text::format_double(labels.threshold) << '\n';
            }
        } else if (*weights_cmd) {
            ForestConfig fc;
            fc.rng_seed = w_seed;
            fc.n_trees = w_trees;
            const auto m = read_feature_csv_file(w_features);
            const auto forest = train_forest(m, fc);
            std::cerr << "out-of-bag accuracy " << text::format_double(forest.oob_accuracy(m)) << '\n';
            write_weights_csv_file(w_out, feature_weights(forest));
        } else if (*export_cmd) {
            const auto kind = parse_package_kind(e_kind);
            SharePackage pkg;
            if (kind == PackageKind::model) {
                if (e_model.empty()) throw ConfigError("--model is required for kind model");
                pkg = make_model_package(e_site, load_model(e_model));
            } else {
                if (e_weights.empty()) throw ConfigError("--weights is required");
                if (e_port <= 0) throw ConfigError("--port is required");
                const auto w = read_weights_csv_file(e_weights);
                if (kind == PackageKind::weights) {
                    pkg = make_weights_package(e_site, static_cast<std::uint16_t>(e_port), w);
                } else {
                    if (e_features.empty()) throw ConfigError("--features is required for weights+moments");
                    pkg = make_adaptive_package(e_site, static_cast<std::uint16_t>(e_port), w,
                                                compute_moments(read_feature_csv_file(e_features)));
                }
            }
            write_package_file(e_out, pkg);
        } else if (*import_cmd) {
            const auto pkg = read_package_file(i_pkg);
            std::cerr << "package from " << pkg.site_id << " port " << pkg.port << " kind " << to_string(pkg.kind)
                      << '\n';
            if (pkg.kind == PackageKind::model) {
                save_model(i_out, *pkg.model);
            } else if (pkg.kind == PackageKind::weights) {
                write_weights_csv_file(i_out, *pkg.weights);
            } else {
                if (i_features.empty()) throw ConfigError("--features is required to adapt weights");
                const auto local = compute_moments(read_feature_csv_file(i_features));
                const auto dist = moment_distance(*pkg.moments, local, parse_distance_method(i_distance));
                std::vector<std::string> warnings;
                const auto w = adapt_weights(*pkg.weights, dist, i_k, &warnings);
                for (const auto& msg : warnings) std::cerr << "warning: " << msg << '\n';
                write_weights_csv_file(i_out, w);
            }
        } else if (*gen_cmd) {
            BenignProfile p = profile_arg(g_profile);
            if (g_seed) p.rng_seed = *g_seed;
            if (g_days < 1) throw ConfigError("--days must be >= 1");
            write_conn_log_tsv_file(g_out, gen_benign(p, g_start, g_start + g_days * 86400LL));
        } else if (*scan_cmd) {
            if (!s_config.empty()) {
                std::ifstream in(s_config);
                if (!in) throw IoError("cannot open " + s_config);
                s_profile = scan_profile_from_json(nlohmann::ordered_json::parse(in));
            }
            write_conn_log_tsv_file(s_out, gen_scan(s_profile));
        } else if (*inject_cmd) {
            const auto benign = read_conn_log_file(j_benign).records;
            auto attack = read_conn_log_file(j_attack).records;
            if (j_slow != 1.0) attack = slow_variant(attack, j_slow, j_seed);
            const auto res = inject(benign, attack, j_offset, j_window);
            for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
            write_conn_log_tsv_file(j_out, res.records);
            if (!j_intervals.empty()) {
                auto out = open_out(j_intervals);
                out << "port,begin,end\n";
                for (const auto& [port, iv] : res.intervals)
                    for (const auto& w : iv) out << port << ',' << w.begin << ',' << w.end << '\n';
            }
        } else if (*eval_cmd) {
            const auto ranking = read_ranking_csv_file(v_ranking);
            const auto truth = load_truth(v_truth);
            const auto report = evaluate(ranking, truth, parse_strategy(v_strategy), v_variant, 0, v_k);
            auto out = open_out(v_out);
            const EvalReport reports[] = {report};
            write_reports_csv(out, reports);
            if (!v_curve.empty()) {
                auto curve = open_out(v_curve);
                write_curve_csv(curve, report);
            }
            for (const auto& [k, pf] : report.at_k)
                std::cout << "k=" << k << " precision=" << text::format_double(truncate2(pf.precision))
                          << " fp=" << pf.fp << " recall=" << text::format_double(report.recall_at(k)) << '\n';
        } else if (*defaults_cmd) {
            nlohmann::ordered_json doc;
            if (x_what == "net-a") doc = to_json(default_profile_net_a());
            else if (x_what == "net-b") doc = to_json(default_profile_net_b());
            else if (x_what == "scan") doc = to_json(ScanProfile{});
            else doc = to_json(ScenarioConfig{});
            std::cout << doc.dump(2) << '\n';
        } else if (*run_cmd) {
            const ScenarioConfig config = r_config.empty() ? ScenarioConfig{} : load_scenario(r_config);
            config.validate();
            const auto result = run_scenario(config);
            write_run(r_out, config, result);
            for (const auto& d : result.diagnostics) std::cerr << "note: " << d << '\n';
            std::cout << result.reports.size() << " reports written to " << r_out << "; Net-A self-check "
                      << (net_a_selfcheck(result.net_a) ? "passed" : "failed") << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
