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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace portshare {

struct KdeOptions {
    double epsilon = 1e-12;          ///< density floor for scoring
    double bandwidth_floor = 1e-6;
    std::size_t max_points = 50000;  ///< larger inputs are subsampled evenly
};

/// Univariate Gaussian KDE. Training points are stored as sorted unique
/// values with multiplicities; the density is the same as the plain average
/// over the original points.
struct KdeModel {
    std::string feature;
    std::vector<double> support;
    std::vector<double> counts;
    double n = 0.0;          ///< total weight, sum of counts
    double bandwidth = 1.0;
    double epsilon = 1e-12;

    double density(double x) const;
    std::vector<double> density(std::span<const double> xs) const;

    /// Throws ValidationError when an invariant does not hold.
    void validate() const;
};

/// Silverman's rule: 0.9 * min(sd, IQR/1.34) * n^(-1/5). A zero IQR falls back
/// to the standard deviation alone; the result is floored at `floor`.
double silverman_bandwidth(std::span<const double> values, double floor = 1e-6);

KdeModel fit_kde(std::span<const double> values, std::string feature = {},
                 const KdeOptions& options = {});

/// -log(max(density(x), epsilon)). Larger means more anomalous.
double raw_score(const KdeModel& model, double x);

}  // namespace portshare
