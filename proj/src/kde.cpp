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

#include "portshare/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "portshare/errors.hpp"
#include "portshare/kernels.hpp"

namespace portshare {

namespace {

double quantile_sorted(std::span<const double> sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double normalizer(const KdeModel& m) { return m.n * m.bandwidth * std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double silverman_bandwidth(std::span<const double> values, double floor)
{
    const auto n = values.size();
    if (n == 0) throw ValidationError("silverman_bandwidth: empty input");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    double sd = 0.0;
    if (n > 1) {
        double mean = 0.0;
        for (double v : sorted) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : sorted) ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, floor);
}

KdeModel fit_kde(std::span<const double> values, std::string feature, const KdeOptions& options)
{
    if (values.empty()) throw ValidationError("fit_kde: no training values for " + feature);
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("fit_kde: non-finite training value for " + feature);
    }
    if (!(options.epsilon > 0.0)) throw ConfigError("fit_kde: epsilon must be positive");

    std::vector<double> pts(values.begin(), values.end());
    std::sort(pts.begin(), pts.end());
    if (options.max_points > 0 && pts.size() > options.max_points) {
        std::vector<double> sub(options.max_points);
        for (std::size_t i = 0; i < options.max_points; ++i) {
            sub[i] = pts[i * pts.size() / options.max_points];
        }
        pts = std::move(sub);
    }

    KdeModel m;
    m.feature = std::move(feature);
    m.epsilon = options.epsilon;
    m.bandwidth = silverman_bandwidth(pts, options.bandwidth_floor);
    m.n = static_cast<double>(pts.size());
    for (double v : pts) {
        if (!m.support.empty() && m.support.back() == v) {
            m.counts.back() += 1.0;
        } else {
            m.support.push_back(v);
            m.counts.push_back(1.0);
        }
    }
    return m;
}

double KdeModel::density(double x) const
{
    return kernels::gaussian_sum(support, counts, bandwidth, x, static_cast<double>(n)) / normalizer(*this);
}

std::vector<double> KdeModel::density(std::span<const double> xs) const
{
    std::vector<double> out(xs.size());
    kernels::gaussian_sums_parallel(support, counts, bandwidth, static_cast<double>(n), xs, out);
    const double norm = normalizer(*this);
    for (double& v : out) v /= norm;
    return out;
}

void KdeModel::validate() const
{
    const std::string who = "kde model " + feature + ": ";
    if (support.empty() || support.size() != counts.size()) throw ValidationError(who + "bad support");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ValidationError(who + "bandwidth must be > 0");
    if (!(epsilon > 0.0)) throw ValidationError(who + "epsilon must be > 0");
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (!std::isfinite(support[i]) || !(counts[i] > 0.0)) throw ValidationError(who + "bad support point");
        if (i > 0 && !(support[i] > support[i - 1])) throw ValidationError(who + "support not sorted");
        total += counts[i];
    }
    if (std::abs(total - n) > 1e-9 * std::max(1.0, n)) throw ValidationError(who + "counts do not sum to n");
}

double raw_score(const KdeModel& model, double x)
{
    if (!std::isfinite(x)) throw ValidationError("raw_score: non-finite input for " + model.feature);
    return -std::log(std::max(model.density(x), model.epsilon));
}

}  // namespace portshare
