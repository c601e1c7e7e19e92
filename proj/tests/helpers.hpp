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

#include <cmath>
#include <random>

#include "portshare/features.hpp"
#include "portshare/sharing.hpp"

namespace testing {

/// Matrix of n one-minute windows starting at t0, every feature drawn from
/// Poisson(mean) so columns look like counts.
inline portshare::FeatureMatrix poisson_matrix(std::size_t n, double mean, std::uint64_t seed,
                                               std::int64_t t0 = 0, std::uint16_t port = 23)
{
    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> pois(mean);
    portshare::FeatureMatrix m;
    m.port = port;
    for (std::size_t i = 0; i < n; ++i) {
        m.window_starts.push_back(t0 + static_cast<std::int64_t>(i) * 60);
        portshare::FeatureRow r{};
        for (auto& v : r) v = pois(rng);
        m.rows.push_back(r);
        m.labels.push_back(portshare::Label::benign);
    }
    return m;
}

/// Weights with a random sparsity pattern, normalized to sum one.
inline portshare::WeightVector random_weights(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::array<double, portshare::kNumFeatures> v{};
    for (auto& x : v) x = u(rng) < 0.3 ? 0.0 : u(rng) * std::pow(10.0, 6.0 * u(rng) - 3.0);
    v[rng() % portshare::kNumFeatures] += 0.5;
    return portshare::WeightVector::normalized(v);
}

inline portshare::MomentSummary random_moments(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    portshare::MomentSummary s;
    s.n = 1 + rng() % 20000;
    for (auto& m : s.features) {
        const double scale = std::pow(10.0, 8.0 * u(rng));
        m = {u(rng) * scale, std::abs(u(rng)) * scale * scale, u(rng) * scale * scale * scale,
             std::abs(u(rng)) * scale * scale * scale * scale};
    }
    return s;
}

}  // namespace testing
