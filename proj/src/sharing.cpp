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

#include "portshare/sharing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "portshare/errors.hpp"

namespace portshare {

namespace {

using ojson = nlohmann::ordered_json;

std::array<double, 4> scaled(const Moments& m, DistanceMethod method)
{
    if (method == DistanceMethod::scale_adjusted) {
        return {m.m1, std::sqrt(m.m2), std::cbrt(m.m3), std::sqrt(std::sqrt(m.m4))};
    }
    return {m.m1, m.m2, m.m3, m.m4};
}

}  // namespace

void MomentSummary::validate() const
{
    if (n < 1) throw ValidationError("moment summary: n must be >= 1");
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto& m = features[f];
        const std::string who = "moment summary " + std::string(kFeatureNames[f]) + ": ";
        if (!std::isfinite(m.m1) || !std::isfinite(m.m2) || !std::isfinite(m.m3) || !std::isfinite(m.m4)) {
            throw ValidationError(who + "non-finite moment");
        }
        if (m.m2 < 0.0) throw ValidationError(who + "negative variance");
        if (m.m4 < 0.0) throw ValidationError(who + "negative fourth moment");
    }
}

MomentSummary compute_moments(const FeatureMatrix& matrix)
{
    if (matrix.size() == 0) throw ValidationError("compute_moments: empty matrix");
    MomentSummary s;
    s.n = matrix.size();
    const double n = static_cast<double>(matrix.size());
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        double sum = 0.0;
        for (const auto& r : matrix.rows) sum += r[f];
        const double mean = sum / n;
        double c2 = 0.0, c3 = 0.0, c4 = 0.0;
        for (const auto& r : matrix.rows) {
            const double d = r[f] - mean;
            const double d2 = d * d;
            c2 += d2;
            c3 += d2 * d;
            c4 += d2 * d2;
        }
        s.features[f] = {mean, c2 / n, c3 / n, c4 / n};
    }
    return s;
}

std::string_view to_string(DistanceMethod m)
{
    switch (m) {
    case DistanceMethod::raw_moments: return "raw_moments";
    case DistanceMethod::scale_adjusted: return "scale_adjusted";
    case DistanceMethod::emd: return "emd";
    }
    return "raw_moments";
}

DistanceMethod parse_distance_method(std::string_view s)
{
    if (s == "raw_moments") return DistanceMethod::raw_moments;
    if (s == "scale_adjusted") return DistanceMethod::scale_adjusted;
    if (s == "emd") return DistanceMethod::emd;
    throw ConfigError("unknown distance method: " + std::string(s));
}

FeatureDistance moment_distance(const MomentSummary& a, const MomentSummary& b, DistanceMethod method)
{
    if (method == DistanceMethod::emd) {
        throw ConfigError("moment_distance: emd needs raw samples, use emd_feature_distance");
    }
    FeatureDistance out;
    out.method = method;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto x = scaled(a.features[f], method);
        const auto y = scaled(b.features[f], method);
        double ss = 0.0;
        for (std::size_t j = 0; j < 4; ++j) ss += (x[j] - y[j]) * (x[j] - y[j]);
        out.d[f] = std::sqrt(ss);
    }
    return out;
}

double emd_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) throw ValidationError("emd_distance: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto na = static_cast<std::uint64_t>(x.size());
    const auto nb = static_cast<std::uint64_t>(y.size());

    // Walk both quantile functions; breakpoints i/na and j/nb are compared in
    // units of 1/(na*nb) so segment lengths are exact integers.
    std::size_t i = 0, j = 0;
    std::uint64_t t = 0;
    double total = 0.0;
    while (i < x.size() && j < y.size()) {
        const std::uint64_t next_a = (i + 1) * nb;
        const std::uint64_t next_b = (j + 1) * na;
        const std::uint64_t next = std::min(next_a, next_b);
        total += std::abs(x[i] - y[j]) * static_cast<double>(next - t);
        t = next;
        if (next_a == next) ++i;
        if (next_b == next) ++j;
    }
    return total / (static_cast<double>(na) * static_cast<double>(nb));
}

FeatureDistance emd_feature_distance(const FeatureMatrix& a, const FeatureMatrix& b)
{
    FeatureDistance out;
    out.method = DistanceMethod::emd;
    for (std::size_t f = 0; f < kNumFeatures; ++f) out.d[f] = emd_distance(a.column(f), b.column(f));
    return out;
}

WeightVector adapt_weights(const WeightVector& shared, const FeatureDistance& distance, int k,
                           std::vector<std::string>* warnings)
{
    if (k < 1) throw ConfigError("adapt_weights: k must be >= 1");
    if (k > static_cast<int>(kNumFeatures)) {
        if (warnings) warnings->push_back("adapt_weights: k=" + std::to_string(k) + " clamped to 35");
        k = static_cast<int>(kNumFeatures);
    }
    for (double d : distance.d) {
        if (!std::isfinite(d) || d < 0.0) throw ValidationError("adapt_weights: invalid distance");
    }

    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (shared[f] > 0.0) candidates.push_back(f);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t x, std::size_t y) {
        if (distance.d[x] != distance.d[y]) return distance.d[x] < distance.d[y];
        if (shared[x] != shared[y]) return shared[x] > shared[y];
        return x < y;
    });
    if (candidates.size() > static_cast<std::size_t>(k)) candidates.resize(static_cast<std::size_t>(k));

    std::array<double, kNumFeatures> kept{};
    for (auto f : candidates) kept[f] = shared[f];
    return WeightVector::normalized(kept);
}

double aggregate_port_distance(const FeatureDistance& distance, const std::optional<WeightVector>& weights)
{
    double s = 0.0;
    if (!weights) {
        for (double d : distance.d) s += d;
        return s / static_cast<double>(kNumFeatures);
    }
    for (std::size_t f = 0; f < kNumFeatures; ++f) s += (*weights)[f] * distance.d[f];
    return s;
}

std::string_view to_string(PackageKind k)
{
    switch (k) {
    case PackageKind::model: return "model";
    case PackageKind::weights: return "weights";
    case PackageKind::weights_moments: return "weights+moments";
    }
    return "weights";
}

PackageKind parse_package_kind(std::string_view s)
{
    if (s == "model") return PackageKind::model;
    if (s == "weights") return PackageKind::weights;
    if (s == "weights+moments") return PackageKind::weights_moments;
    throw ValidationError("unknown package kind: " + std::string(s));
}

void SharePackage::validate() const
{
    if (schema_version != kSchemaVersion) {
        throw ValidationError("share package: unsupported schema_version " + std::to_string(schema_version));
    }
    if (site_id.empty()) throw ValidationError("share package: empty site_id");
    switch (kind) {
    case PackageKind::model:
        if (!model || weights || moments) throw ValidationError("share package: model kind needs exactly a model payload");
        model->validate();
        if (model->port != port) throw ValidationError("share package: model port differs from package port");
        break;
    case PackageKind::weights:
        if (model || !weights || moments) throw ValidationError("share package: weights kind needs exactly a weights payload");
        validate_weights(weights->values());
        break;
    case PackageKind::weights_moments:
        if (model || !weights || !moments) {
            throw ValidationError("share package: weights+moments kind needs weights and moments payloads");
        }
        validate_weights(weights->values());
        moments->validate();
        break;
    }
}

SharePackage make_model_package(std::string site_id, EnsembleModel model)
{
    SharePackage p;
    p.site_id = std::move(site_id);
    p.port = model.port;
    p.kind = PackageKind::model;
    model.training_normalized.clear();
    p.model = std::move(model);
    return p;
}

SharePackage make_weights_package(std::string site_id, std::uint16_t port, WeightVector weights)
{
    SharePackage p;
    p.site_id = std::move(site_id);
    p.port = port;
    p.kind = PackageKind::weights;
    p.weights = weights;
    return p;
}

SharePackage make_adaptive_package(std::string site_id, std::uint16_t port, WeightVector weights,
                                   MomentSummary moments)
{
    SharePackage p;
    p.site_id = std::move(site_id);
    p.port = port;
    p.kind = PackageKind::weights_moments;
    p.weights = weights;
    p.moments = moments;
    return p;
}

std::string export_package(const SharePackage& pkg)
{
    pkg.validate();
    ojson doc;
    doc["schema_version"] = pkg.schema_version;
    doc["site_id"] = pkg.site_id;
    doc["port"] = pkg.port;
    doc["kind"] = std::string(to_string(pkg.kind));
    ojson payload = ojson::object();
    if (pkg.model) payload["model"] = to_json(*pkg.model);
    if (pkg.weights) {
        ojson w = ojson::object();
        for (std::size_t f = 0; f < kNumFeatures; ++f) w[std::string(kFeatureNames[f])] = (*pkg.weights)[f];
        payload["weights"] = std::move(w);
    }
    if (pkg.moments) {
        ojson m;
        m["n"] = pkg.moments->n;
        ojson feats = ojson::object();
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            const auto& mo = pkg.moments->features[f];
            feats[std::string(kFeatureNames[f])] = {{"m1", mo.m1}, {"m2", mo.m2}, {"m3", mo.m3}, {"m4", mo.m4}};
        }
        m["features"] = std::move(feats);
        payload["moments"] = std::move(m);
    }
    doc["payload"] = std::move(payload);
    return doc.dump(1) + "\n";
}

SharePackage import_package(std::string_view bytes)
{
    auto doc = ojson::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ValidationError("share package: not a JSON object");
    try {
        SharePackage p;
        p.schema_version = doc.at("schema_version").get<int>();
        if (p.schema_version != SharePackage::kSchemaVersion) {
            throw ValidationError("share package: unsupported schema_version " + std::to_string(p.schema_version));
        }
        p.site_id = doc.at("site_id").get<std::string>();
        const auto port = doc.at("port").get<std::int64_t>();
        if (port < 0 || port > 65535) throw ValidationError("share package: port out of range");
        p.port = static_cast<std::uint16_t>(port);
        p.kind = parse_package_kind(doc.at("kind").get<std::string>());
        const auto& payload = doc.at("payload");
        if (!payload.is_object()) throw ValidationError("share package: payload must be an object");
        for (const auto& [key, value] : payload.items()) {
            if (key != "model" && key != "weights" && key != "moments") {
                throw ValidationError("share package: unknown payload field " + key);
            }
        }
        if (payload.contains("model")) p.model = ensemble_from_json(payload.at("model"));
        if (payload.contains("weights")) {
            const auto& jw = payload.at("weights");
            std::map<std::string, double, std::less<>> named;
            for (const auto& [key, value] : jw.items()) named[key] = value.get<double>();
            p.weights = WeightVector::from_named(named);
        }
        if (payload.contains("moments")) {
            const auto& jm = payload.at("moments");
            MomentSummary m;
            const auto n = jm.at("n").get<std::int64_t>();
            if (n < 1) throw ValidationError("share package: moment count must be >= 1");
            m.n = static_cast<std::size_t>(n);
            const auto& feats = jm.at("features");
            if (feats.size() != kNumFeatures) throw ValidationError("share package: moments must cover 35 features");
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                const auto& jf = feats.at(std::string(kFeatureNames[f]));
                m.features[f] = {jf.at("m1").get<double>(), jf.at("m2").get<double>(),
                                 jf.at("m3").get<double>(), jf.at("m4").get<double>()};
            }
            p.moments = m;
        }
        p.validate();
        return p;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw ValidationError(std::string("share package: ") + e.what());
    }
}

void write_package_file(const std::string& path, const SharePackage& pkg)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write package: " + path);
    out << export_package(pkg);
    if (!out) throw IoError("write error on package: " + path);
}

SharePackage read_package_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open package: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return import_package(ss.str());
}

}  // namespace portshare
