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
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "portshare/features.hpp"

namespace portshare {

/// Per-feature ensemble weights: non-negative, summing to one.
class WeightVector {
public:
    static constexpr double kSumTolerance = 1e-9;

    /// Mean Ensemble weights, 1/35 each.
    static WeightVector uniform();
    /// Validates and wraps raw values.
    static WeightVector from_values(const std::array<double, kNumFeatures>& values);
    /// Scales non-negative values to sum one; throws when the total is zero.
    static WeightVector normalized(const std::array<double, kNumFeatures>& values);
    static WeightVector from_named(const std::map<std::string, double, std::less<>>& named);

    const std::array<double, kNumFeatures>& values() const { return w_; }
    double operator[](std::size_t i) const { return w_[i]; }
    std::size_t nonzero() const;

    bool operator==(const WeightVector&) const = default;

private:
    std::array<double, kNumFeatures> w_{};
};

/// Throws ValidationError unless every value is finite, >= 0, and the sum is 1 +- 1e-9.
void validate_weights(const std::array<double, kNumFeatures>& values);

/// Two-column CSV, `feature,weight`, one row per canonical feature.
void write_weights_csv(std::ostream& out, const WeightVector& w);
void write_weights_csv_file(const std::string& path, const WeightVector& w);
WeightVector read_weights_csv(std::istream& in);
WeightVector read_weights_csv_file(const std::string& path);

}  // namespace portshare
