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

#include "portshare/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "portshare/errors.hpp"
#include "portshare/text.hpp"

namespace portshare {

namespace {

constexpr const char* kModelFormat = "portshare-ensemble";

std::vector<double> sorted_unique(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<double> final_scores(const std::vector<FeatureRow>& normalized, const WeightVector& w)
{
    std::vector<double> out(normalized.size());
    for (std::size_t i = 0; i < normalized.size(); ++i) out[i] = combine(normalized[i], w);
    return out;
}

}  // namespace

void EnsembleModel::validate() const
{
    if (kdes.size() != kNumFeatures) throw ValidationError("ensemble model: expected 35 KDE models");
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (kdes[f].feature != kFeatureNames[f]) {
            throw ValidationError("ensemble model: KDE " + std::to_string(f) + " is not " +
                                  std::string(kFeatureNames[f]));
        }
        kdes[f].validate();
        if (!(bounds[f].lo <= bounds[f].hi) || !std::isfinite(bounds[f].lo) || !std::isfinite(bounds[f].hi)) {
            throw ValidationError("ensemble model: bad normalization bounds for " + kdes[f].feature);
        }
    }
    validate_weights(weights.values());
}

double normalize(const NormBounds& b, double raw)
{
    if (!(b.hi > b.lo)) return 0.0;
    return std::clamp((raw - b.lo) / (b.hi - b.lo), 0.0, 1.0);
}

EnsembleModel fit_ensemble(const FeatureMatrix& training, const KdeOptions& options)
{
    training.validate();
    if (training.size() == 0) throw ValidationError("fit_ensemble: empty training matrix");

    EnsembleModel model;
    model.port = training.port;
    model.kdes.resize(kNumFeatures);
    model.training_normalized.assign(training.size(), FeatureRow{});

    // Features are independent; the kernel calls inside run single-threaded
    // when nested.
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        auto column = training.column(f);
        KdeModel kde = fit_kde(column, std::string(kFeatureNames[f]), options);

        const auto values = sorted_unique(column);
        auto dens = kde.density(values);
        std::vector<double> raw(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) raw[i] = -std::log(std::max(dens[i], kde.epsilon));
        const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
        const NormBounds b{*mn, *mx};

        for (std::size_t r = 0; r < column.size(); ++r) {
            auto it = std::lower_bound(values.begin(), values.end(), column[r]);
            model.training_normalized[r][f] = normalize(b, raw[static_cast<std::size_t>(it - values.begin())]);
        }
        model.bounds[f] = b;
        model.kdes[f] = std::move(kde);
    }
    model.training_scores = final_scores(model.training_normalized, model.weights);
    return model;
}

EnsembleModel with_weights(EnsembleModel model, const WeightVector& weights)
{
    model.weights = weights;
    if (!model.training_normalized.empty()) {
        model.training_scores = final_scores(model.training_normalized, weights);
    } else {
        model.training_scores.clear();
    }
    return model;
}

NormalizedScores normalized_scores(const EnsembleModel& model, const FeatureMatrix& matrix)
{
    if (model.kdes.size() != kNumFeatures) throw ValidationError("normalized_scores: model not fitted");
    NormalizedScores out(matrix.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto column = matrix.column(f);
        const auto dens = model.kdes[f].density(column);
        for (std::size_t r = 0; r < column.size(); ++r) {
            const double raw = -std::log(std::max(dens[r], model.kdes[f].epsilon));
            out[r][f] = normalize(model.bounds[f], raw);
        }
    }
    return out;
}

double combine(const FeatureRow& normalized, const WeightVector& weights)
{
    double s = 0.0;
    for (std::size_t f = 0; f < kNumFeatures; ++f) s += weights[f] * normalized[f];
    return s;
}

double ensemble_score(const EnsembleModel& model, const FeatureVector& v)
{
    if (model.kdes.size() != kNumFeatures) throw ValidationError("ensemble_score: model not fitted");
    FeatureRow norm{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        norm[f] = normalize(model.bounds[f], raw_score(model.kdes[f], v.values[f]));
    }
    return combine(norm, model.weights);
}

AlertRanking rank_scores(std::uint16_t port, std::span<const std::int64_t> windows,
                         std::span<const double> scores)
{
    if (windows.size() != scores.size()) throw ValidationError("rank_scores: size mismatch");
    AlertRanking r;
    r.port = port;
    r.entries.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) r.entries.push_back({windows[i], scores[i]});
    std::sort(r.entries.begin(), r.entries.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.window_start < b.window_start;
    });
    return r;
}

AlertRanking rank_alerts(const NormalizedScores& scores, const FeatureMatrix& matrix,
                         const WeightVector& weights)
{
    if (scores.size() != matrix.size()) throw ValidationError("rank_alerts: score/matrix size mismatch");
    return rank_scores(matrix.port, matrix.window_starts, final_scores(scores, weights));
}

AlertRanking rank_alerts(const EnsembleModel& model, const FeatureMatrix& matrix)
{
    if (model.port != matrix.port) {
        throw ValidationError("rank_alerts: model is for port " + std::to_string(model.port) +
                              ", matrix is for port " + std::to_string(matrix.port));
    }
    return rank_alerts(normalized_scores(model, matrix), matrix, model.weights);
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) throw ValidationError("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= values.size()) return values.back();
    return values[i] + (pos - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

std::size_t DetectionLabels::malicious() const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::malicious));
}

DetectionLabels label_by_detection(const AlertRanking& ranking, const EnsembleModel& model, double q)
{
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("label_by_detection: q must be in (0, 1]");
    if (model.training_scores.empty()) {
        throw ValidationError("label_by_detection: model carries no training scores");
    }
    DetectionLabels out;
    out.threshold = quantile(model.training_scores, q);
    std::vector<AlertRanking::Entry> entries = ranking.entries;
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.window_start < b.window_start; });
    for (const auto& e : entries) {
        out.window_starts.push_back(e.window_start);
        out.labels.push_back(e.score > out.threshold ? Label::malicious : Label::benign);
    }
    return out;
}

nlohmann::ordered_json to_json(const EnsembleModel& model)
{
    nlohmann::ordered_json doc;
    doc["format"] = kModelFormat;
    doc["format_version"] = EnsembleModel::kFormatVersion;
    doc["port"] = model.port;
    auto& feats = doc["features"] = nlohmann::ordered_json::array();
    for (std::size_t f = 0; f < model.kdes.size(); ++f) {
        const auto& k = model.kdes[f];
        nlohmann::ordered_json jf;
        jf["name"] = k.feature;
        jf["bandwidth"] = k.bandwidth;
        jf["epsilon"] = k.epsilon;
        jf["n"] = k.n;
        jf["norm_lo"] = model.bounds[f].lo;
        jf["norm_hi"] = model.bounds[f].hi;
        jf["support"] = k.support;
        jf["counts"] = k.counts;
        feats.push_back(std::move(jf));
    }
    auto& w = doc["weights"] = nlohmann::ordered_json::object();
    for (std::size_t f = 0; f < kNumFeatures; ++f) w[std::string(kFeatureNames[f])] = model.weights[f];
    doc["training_scores"] = model.training_scores;
    return doc;
}

EnsembleModel ensemble_from_json(const nlohmann::ordered_json& doc)
{
    try {
        if (doc.at("format").get<std::string>() != kModelFormat) {
            throw ValidationError("model document: unexpected format tag");
        }
        const int version = doc.at("format_version").get<int>();
        if (version != EnsembleModel::kFormatVersion) {
            throw ValidationError("model document: unsupported format_version " + std::to_string(version));
        }
        EnsembleModel m;
        m.port = doc.at("port").get<std::uint16_t>();
        const auto& feats = doc.at("features");
        if (!feats.is_array() || feats.size() != kNumFeatures) {
            throw ValidationError("model document: expected 35 features");
        }
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            const auto& jf = feats[f];
            KdeModel k;
            k.feature = jf.at("name").get<std::string>();
            k.bandwidth = jf.at("bandwidth").get<double>();
            k.epsilon = jf.at("epsilon").get<double>();
            k.n = jf.at("n").get<double>();
            k.support = jf.at("support").get<std::vector<double>>();
            k.counts = jf.at("counts").get<std::vector<double>>();
            m.bounds[f] = {jf.at("norm_lo").get<double>(), jf.at("norm_hi").get<double>()};
            m.kdes.push_back(std::move(k));
        }
        m.weights = WeightVector::from_named(doc.at("weights").get<std::map<std::string, double, std::less<>>>());
        m.training_scores = doc.at("training_scores").get<std::vector<double>>();
        m.validate();
        return m;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw ValidationError(std::string("model document: ") + e.what());
    }
}

void save_model(const std::string& path, const EnsembleModel& model)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model: " + path);
    out << to_json(model).dump() << '\n';
    if (!out) throw IoError("write error on model: " + path);
}

EnsembleModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model: " + path);
    auto doc = nlohmann::ordered_json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ValidationError("model file is not valid JSON: " + path);
    return ensemble_from_json(doc);
}

void write_ranking_csv(std::ostream& out, const AlertRanking& ranking)
{
    out << "port,rank,window_start,score\n";
    std::size_t rank = 1;
    for (const auto& e : ranking.entries) {
        out << ranking.port << ',' << rank++ << ',' << e.window_start << ',' << text::format_double(e.score) << '\n';
    }
    if (!out) throw IoError("write error on ranking CSV");
}

void write_ranking_csv_file(const std::string& path, const AlertRanking& ranking)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write ranking: " + path);
    write_ranking_csv(out, ranking);
}

AlertRanking read_ranking_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "port,rank,window_start,score") {
        throw ValidationError("ranking CSV: expected header port,rank,window_start,score");
    }
    AlertRanking r;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty()) continue;
        auto cols = text::split(t, ',');
        if (cols.size() != 4) throw ValidationError("ranking CSV: expected four columns");
        auto port = text::parse_uint(cols[0]);
        auto ws = text::parse_int(cols[2]);
        auto score = text::parse_double(cols[3]);
        if (!port || *port > 65535 || !ws || !score) throw ValidationError("ranking CSV: bad row");
        r.port = static_cast<std::uint16_t>(*port);
        r.entries.push_back({*ws, *score});
    }
    return r;
}

AlertRanking read_ranking_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ranking: " + path);
    return read_ranking_csv(in);
}

}  // namespace portshare
