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

#include "portshare/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace portshare::kernels {

double gaussian_sum_reference(std::span<const double> support, std::span<const double> weights,
                              double h, double x)
{
    double sum = 0.0;
    for (std::size_t j = 0; j < support.size(); ++j) {
        const double u = (x - support[j]) / h;
        sum += weights[j] * std::exp(-0.5 * u * u);
    }
    return sum;
}

double truncation_radius(double nearest, double total_weight)
{
    // Every dropped term is below exp(-r^2/2) and the nearest term is exp(-nearest^2/2).
    const double r2 = nearest * nearest + 2.0 * (std::log(std::max(total_weight, 1.0)) - std::log(kTailTolerance));
    return std::min(std::sqrt(r2), kUnderflowRadius);
}

double gaussian_sum(std::span<const double> support, std::span<const double> weights, double h,
                    double x, double total_weight)
{
    if (support.empty()) return 0.0;
    const auto at = std::lower_bound(support.begin(), support.end(), x);
    double nearest = kUnderflowRadius * h;
    if (at != support.end()) nearest = std::min(nearest, *at - x);
    if (at != support.begin()) nearest = std::min(nearest, x - *(at - 1));
    const double reach = truncation_radius(nearest / h, total_weight) * h;
    const auto lo = std::lower_bound(support.begin(), at, x - reach) - support.begin();
    const auto hi = std::upper_bound(at, support.end(), x + reach) - support.begin();
    const double* s = support.data();
    const double* w = weights.data();
    const double inv_h = 1.0 / h;

    double sum = 0.0;
#pragma omp simd reduction(+ : sum)
    for (std::ptrdiff_t j = lo; j < hi; ++j) {
        const double u = (x - s[j]) * inv_h;
        sum += w[j] * exp_nonpositive(-0.5 * u * u);
    }
    return sum;
}

void gaussian_sums_reference(std::span<const double> support, std::span<const double> weights,
                             double h, std::span<const double> queries, std::span<double> out)
{
    for (std::size_t i = 0; i < queries.size(); ++i) {
        out[i] = gaussian_sum_reference(support, weights, h, queries[i]);
    }
}

void gaussian_sums_parallel(std::span<const double> support, std::span<const double> weights,
                            double h, double total_weight, std::span<const double> queries,
                            std::span<double> out)
{
    const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            gaussian_sum(support, weights, h, queries[static_cast<std::size_t>(i)], total_weight);
    }
}

}  // namespace portshare::kernels
