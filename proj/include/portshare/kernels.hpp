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

#include <bit>
#include <cstdint>
#include <span>

/// Gaussian kernel sums, the hot loop of KDE scoring.
///
/// Two implementations live side by side. The `reference` routines are plain
/// serial loops over every support point using std::exp; tests and the
/// benchmark treat them as ground truth. The `parallel` routines restrict each
/// sum to support points near the query, evaluate exp with a branch-free
/// polynomial the compiler can vectorize, and spread queries across OpenMP
/// threads. Both agree to ~1e-14 relative.
namespace portshare::kernels {

/// Beyond this many bandwidths a kernel term is below 1e-307.
inline constexpr double kUnderflowRadius = 37.6;

/// Dropped terms add at most this fraction of the largest kept term.
inline constexpr double kTailTolerance = 1e-15;

/// Half-width, in bandwidths, of the window that keeps the truncated sum within
/// kTailTolerance of the full sum. `nearest` is the distance to the closest
/// support point in bandwidths, `total_weight` the sum of all weights.
double truncation_radius(double nearest, double total_weight);

/// exp(x) for -708 <= x <= 0. Smaller inputs give garbage; callers stay inside kUnderflowRadius.
inline double exp_nonpositive(double x)
{
    constexpr double kLog2e = 1.4426950408889634;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    constexpr double kShifter = 0x1.8p52;

    // No range check: any select here keeps GCC from vectorizing the caller's loop.
    const double kd = x * kLog2e + kShifter;
    const double k = kd - kShifter;
    const double r = (x - k * kLn2Hi) - k * kLn2Lo;

    // Taylor series to degree 13; |r| <= ln2/2 keeps truncation below 1 ulp.
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;

    const std::int64_t ki = std::bit_cast<std::int64_t>(kd) - std::bit_cast<std::int64_t>(kShifter);
    const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ki + 1023) << 52);
    return p * scale;
}

/// sum_j weights[j] * exp(-((x - support[j]) / h)^2 / 2), every term, std::exp.
double gaussian_sum_reference(std::span<const double> support, std::span<const double> weights,
                              double h, double x);

/// Same sum over a sorted support, skipping negligible terms.
double gaussian_sum(std::span<const double> support, std::span<const double> weights, double h,
                    double x, double total_weight);

void gaussian_sums_reference(std::span<const double> support, std::span<const double> weights,
                             double h, std::span<const double> queries, std::span<double> out);

/// OpenMP across queries; `support` must be sorted ascending.
void gaussian_sums_parallel(std::span<const double> support, std::span<const double> weights,
                            double h, double total_weight, std::span<const double> queries,
                            std::span<double> out);

}  // namespace portshare::kernels
