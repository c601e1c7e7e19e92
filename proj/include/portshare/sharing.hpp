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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "portshare/ensemble.hpp"
#include "portshare/features.hpp"
#include "portshare/weights.hpp"

namespace portshare {

/// Mean and second to fourth central moments of one feature column.
struct Moments {
    double m1 = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    bool operator==(const Moments&) const = default;
};

struct MomentSummary {
    std::array<Moments, kNumFeatures> features{};
    std::size_t n = 0;

    void validate() const;
    bool operator==(const MomentSummary&) const = default;
};

/// Population moments of every column. Throws on an empty matrix.
MomentSummary compute_moments(const FeatureMatrix& matrix);

enum class DistanceMethod { raw_moments, scale_adjusted, emd };

std::string_view to_string(DistanceMethod m);
DistanceMethod parse_distance_method(std::string_view s);

struct FeatureDistance {
    DistanceMethod method = DistanceMethod::raw_moments;
    std::array<double, kNumFeatures> d{};
};

/// Per-feature Euclidean distance between the moment 4-vectors.
/// scale_adjusted first maps (m1, m2, m3, m4) to (m1, m2^1/2, cbrt(m3), m4^1/4).
FeatureDistance moment_distance(const MomentSummary& a, const MomentSummary& b,
                                DistanceMethod method = DistanceMethod::raw_moments);

/// 1-D Wasserstein-1 distance between two empirical samples.
double emd_distance(std::span<const double> a, std::span<const double> b);

/// emd_distance per column. Needs both sites' raw windows, so it is an
/// offline analysis tool and never part of a SharePackage.
FeatureDistance emd_feature_distance(const FeatureMatrix& a, const FeatureMatrix& b);

/// Keeps the k closest features among those with positive shared weight
/// (ties: larger weight, then column order), zeroes the rest and renormalizes.
/// k above 35 is clamped with a warning.
WeightVector adapt_weights(const WeightVector& shared, const FeatureDistance& distance, int k = 10,
                           std::vector<std::string>* warnings = nullptr);

/// Plain mean of the distances, or the weighted sum when weights are given.
double aggregate_port_distance(const FeatureDistance& distance,
                               const std::optional<WeightVector>& weights = std::nullopt);

enum class PackageKind { model, weights, weights_moments };

std::string_view to_string(PackageKind k);
PackageKind parse_package_kind(std::string_view s);

struct SharePackage {
    static constexpr int kSchemaVersion = 1;

    int schema_version = kSchemaVersion;
    std::string site_id;
    std::uint16_t port = 0;
    PackageKind kind = PackageKind::weights;
    std::optional<EnsembleModel> model;
    std::optional<WeightVector> weights;
    std::optional<MomentSummary> moments;

    /// Payload must match the declared kind and satisfy every type invariant.
    void validate() const;
};

SharePackage make_model_package(std::string site_id, EnsembleModel model);
SharePackage make_weights_package(std::string site_id, std::uint16_t port, WeightVector weights);
SharePackage make_adaptive_package(std::string site_id, std::uint16_t port, WeightVector weights,
                                   MomentSummary moments);

std::string export_package(const SharePackage& pkg);
/// Parses and validates; throws ValidationError naming the first problem.
SharePackage import_package(std::string_view bytes);

void write_package_file(const std::string& path, const SharePackage& pkg);
SharePackage read_package_file(const std::string& path);

}  // namespace portshare
