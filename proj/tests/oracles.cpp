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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace oracle {

double direct_density(std::span<const double> values, double h, double x)
{
    long double sum = 0.0L;
    for (double v : values) {
        const long double u = (static_cast<long double>(x) - v) / h;
        sum += std::exp(-0.5L * u * u);
    }
    const long double norm = static_cast<long double>(values.size()) * h *
                             std::sqrt(2.0L * std::numbers::pi_v<long double>);
    return static_cast<double>(sum / norm);
}

double silverman(std::span<const double> values, double floor)
{
    std::vector<long double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    auto q = [&](long double p) {
        const long double pos = p * static_cast<long double>(n - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const auto hi = std::min(lo + 1, n - 1);
        return v[lo] + (pos - static_cast<long double>(lo)) * (v[hi] - v[lo]);
    };
    long double sd = 0.0L;
    if (n > 1) {
        long double mean = 0.0L;
        for (auto x : v) mean += x;
        mean /= static_cast<long double>(n);
        long double ss = 0.0L;
        for (auto x : v) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<long double>(n - 1));
    }
    const long double iqr = q(0.75L) - q(0.25L);
    const long double spread = iqr > 0.0L ? std::min(sd, iqr / 1.34L) : sd;
    const long double h = 0.9L * spread * std::pow(static_cast<long double>(n), -0.2L);
    return std::max(static_cast<double>(h), floor);
}

CentralMoments central_moments(std::span<const double> values)
{
    const auto n = static_cast<long double>(values.size());
    long double mean = 0.0L;
    for (double v : values) mean += v;
    mean /= n;
    long double s2 = 0.0L, s3 = 0.0L, s4 = 0.0L;
    for (double v : values) {
        const long double d = v - mean;
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
    }
    return {static_cast<double>(mean), static_cast<double>(s2 / n), static_cast<double>(s3 / n),
            static_cast<double>(s4 / n)};
}

double transport_lp(std::span<const double> a, std::span<const double> b)
{
    // Nodes: source, a-points, b-points, sink.
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    const int n = na + nb + 2;
    const int src = 0, sink = n - 1;
    struct Edge {
        int to;
        std::int64_t cap;
        long double cost;
    };
    std::vector<Edge> edges;
    std::vector<std::vector<int>> adj(n);
    auto add = [&](int u, int v, std::int64_t cap, long double cost) {
        adj[u].push_back(static_cast<int>(edges.size()));
        edges.push_back({v, cap, cost});
        adj[v].push_back(static_cast<int>(edges.size()));
        edges.push_back({u, 0, -cost});
    };
    for (int i = 0; i < na; ++i) add(src, 1 + i, nb, 0.0);
    for (int j = 0; j < nb; ++j) add(1 + na + j, sink, na, 0.0);
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < nb; ++j) add(1 + i, 1 + na + j, std::int64_t{na} * nb, std::abs(static_cast<long double>(a[i]) - b[j]));
    }

    const std::int64_t need = std::int64_t{na} * nb;
    std::int64_t sent = 0;
    long double cost = 0.0L;
    // Successive shortest paths with Dijkstra on reduced costs. All original
    // costs are non-negative, so zero potentials are valid to start with.
    std::vector<long double> pot(n, 0.0L);
    while (sent < need) {
        const long double inf = std::numeric_limits<long double>::infinity();
        std::vector<long double> dist(n, inf);
        std::vector<int> via(n, -1);
        std::vector<bool> done(n, false);
        dist[src] = 0.0L;
        for (int iter = 0; iter < n; ++iter) {
            int u = -1;
            for (int v = 0; v < n; ++v)
                if (!done[v] && (u < 0 || dist[v] < dist[u])) u = v;
            if (u < 0 || dist[u] == inf) break;
            done[u] = true;
            for (int e : adj[u]) {
                if (edges[e].cap <= 0 || done[edges[e].to]) continue;
                // Reduced costs are non-negative up to rounding.
                const long double rc = std::max(0.0L, edges[e].cost + pot[u] - pot[edges[e].to]);
                if (dist[u] + rc < dist[edges[e].to]) {
                    dist[edges[e].to] = dist[u] + rc;
                    via[edges[e].to] = e;
                }
            }
        }
        if (via[sink] < 0) throw std::logic_error("transport_lp: infeasible");
        for (int v = 0; v < n; ++v)
            if (dist[v] < inf) pot[v] += dist[v];
        std::int64_t push = need - sent;
        long double path_cost = 0.0L;
        for (int v = sink; v != src; v = edges[via[v] ^ 1].to) {
            push = std::min(push, edges[via[v]].cap);
            path_cost += edges[via[v]].cost;
        }
        for (int v = sink; v != src; v = edges[via[v] ^ 1].to) {
            edges[via[v]].cap -= push;
            edges[via[v] ^ 1].cap += push;
        }
        cost += static_cast<long double>(push) * path_cost;
        sent += push;
    }
    return static_cast<double>(cost / static_cast<long double>(need));
}

std::pair<std::int64_t, std::int64_t> poisson_band(double mean, double alpha)
{
    // Walk the pmf in log space from 0; fine for the means used in tests.
    const double tail = alpha / 2.0;
    double cdf = 0.0;
    std::int64_t lo = -1, hi = -1;
    for (std::int64_t c = 0;; ++c) {
        const double logp = -mean + static_cast<double>(c) * std::log(mean) - std::lgamma(c + 1.0);
        const double p = std::exp(logp);
        if (lo < 0 && cdf + p > tail) lo = c;
        cdf += p;
        if (hi < 0 && cdf >= 1.0 - tail) {
            hi = c;
            break;
        }
    }
    return {lo, hi};
}

double dispersion_statistic(std::span<const std::int64_t> counts, double mean)
{
    double s = 0.0;
    for (auto c : counts) s += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean) / mean;
    return s;
}

double normal_quantile(double p)
{
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p > 1.0 - 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double chi_square_upper(double dof, double alpha)
{
    const double z = normal_quantile(1.0 - alpha);
    const double t = 2.0 / (9.0 * dof);
    const double w = 1.0 - t + z * std::sqrt(t);
    return dof * w * w * w;
}

}  // namespace oracle
