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
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "portshare/features.hpp"
#include "portshare/kde.hpp"
#include "portshare/weights.hpp"

namespace portshare {

struct NormBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// Per-port detector: one KDE per feature, min-max bounds of the training raw
/// scores, and the weights used to combine normalized scores.
struct EnsembleModel {
    static constexpr int kFormatVersion = 1;

    std::uint16_t port = 0;
    std::vector<KdeModel> kdes;  // kNumFeatures entries, canonical order
    std::array<NormBounds, kNumFeatures> bounds{};
    WeightVector weights = WeightVector::uniform();
    /// Final scores of the training windows under `weights`; the reference
    /// distribution for label_by_detection.
    std::vector<double> training_scores;
    /// Normalized per-feature training scores. In memory only; lets
    /// with_weights() recompute training_scores.
    std::vector<FeatureRow> training_normalized;

    void validate() const;
};

using NormalizedScores = std::vector<FeatureRow>;

/// Fits the Mean Ensemble on every row of `training`.
EnsembleModel fit_ensemble(const FeatureMatrix& training, const KdeOptions& options = {});

/// Copy of `model` combining scores with `weights` (Weighted Ensemble).
EnsembleModel with_weights(EnsembleModel model, const WeightVector& weights);

/// Min-max normalized raw score, clamped to [0, 1]; degenerate bounds give 0.
double normalize(const NormBounds& b, double raw);

/// Per-feature normalized scores for every row of `matrix`.
NormalizedScores normalized_scores(const EnsembleModel& model, const FeatureMatrix& matrix);

double combine(const FeatureRow& normalized, const WeightVector& weights);

double ensemble_score(const EnsembleModel& model, const FeatureVector& v);

struct AlertRanking {
    struct Entry {
        std::int64_t window_start = 0;
        double score = 0.0;
        bool operator==(const Entry&) const = default;
    };
    std::uint16_t port = 0;
    std::vector<Entry> entries;  // score descending, window_start ascending on ties
};

/// Sorts windows by score, highest first; ties go to the earlier window.
AlertRanking rank_scores(std::uint16_t port, std::span<const std::int64_t> windows,
                         std::span<const double> scores);
AlertRanking rank_alerts(const EnsembleModel& model, const FeatureMatrix& matrix);
AlertRanking rank_alerts(const NormalizedScores& scores, const FeatureMatrix& matrix,
                         const WeightVector& weights);

/// Linear-interpolation quantile (q in [0,1]) of unsorted values.
double quantile(std::vector<double> values, double q);

struct DetectionLabels {
    double threshold = 0.0;
    std::vector<std::int64_t> window_starts;  // ascending
    std::vector<Label> labels;
    std::size_t malicious() const;
};

/// Windows scoring strictly above the q-quantile of the model's training
/// final scores are malicious.
DetectionLabels label_by_detection(const AlertRanking& ranking, const EnsembleModel& model,
                                   double q = 0.999);

nlohmann::ordered_json to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const nlohmann::ordered_json& doc);
void save_model(const std::string& path, const EnsembleModel& model);
EnsembleModel load_model(const std::string& path);

void write_ranking_csv(std::ostream& out, const AlertRanking& ranking);
void write_ranking_csv_file(const std::string& path, const AlertRanking& ranking);
AlertRanking read_ranking_csv(std::istream& in);
AlertRanking read_ranking_csv_file(const std::string& path);

}  // namespace portshare
