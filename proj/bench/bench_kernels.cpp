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

// Gaussian kernel sums: serial std::exp reference against the truncated
// OpenMP/SIMD path, on zero-inflated count data like the window features.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "portshare/kde.hpp"
#include "portshare/kernels.hpp"

namespace {

struct Data {
    portshare::KdeModel model;
    std::vector<double> queries;
};

Data make_data(std::size_t n_train, std::size_t n_query)
{
    std::mt19937_64 rng(1);
    std::bernoulli_distribution zero(0.3);
    std::lognormal_distribution<double> ln(3.0, 1.0);
    std::vector<double> train(n_train);
    for (auto& x : train) x = zero(rng) ? 0.0 : std::round(ln(rng));
    Data d{portshare::fit_kde(train), std::vector<double>(n_query)};
    for (auto& q : d.queries) q = std::round(ln(rng) * 1.2);
    return d;
}

void BM_Reference(benchmark::State& state)
{
    auto d = make_data(static_cast<std::size_t>(state.range(0)), 1440);
    std::vector<double> out(d.queries.size());
    for (auto _ : state) {
        portshare::kernels::gaussian_sums_reference(d.model.support, d.model.counts, d.model.bandwidth, d.queries, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.queries.size()));
    state.counters["support"] = static_cast<double>(d.model.support.size());
}

void BM_Parallel(benchmark::State& state)
{
    auto d = make_data(static_cast<std::size_t>(state.range(0)), 1440);
    std::vector<double> out(d.queries.size());
    for (auto _ : state) {
        portshare::kernels::gaussian_sums_parallel(d.model.support, d.model.counts, d.model.bandwidth, d.model.n,
                                                   d.queries, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.queries.size()));
    state.counters["support"] = static_cast<double>(d.model.support.size());
}

// Continuous values: every training point is its own support entry.
void BM_ParallelContinuous(benchmark::State& state)
{
    std::mt19937_64 rng(2);
    std::lognormal_distribution<double> ln(3.0, 1.0);
    std::vector<double> train(static_cast<std::size_t>(state.range(0)));
    for (auto& x : train) x = ln(rng);
    auto model = portshare::fit_kde(train);
    std::vector<double> q(1440), out(1440);
    for (auto& x : q) x = ln(rng);
    for (auto _ : state) {
        portshare::kernels::gaussian_sums_parallel(model.support, model.counts, model.bandwidth, model.n, q, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 1440);
}

}  // namespace

BENCHMARK(BM_Reference)->Arg(1440)->Arg(10080);
BENCHMARK(BM_Parallel)->Arg(1440)->Arg(10080);
BENCHMARK(BM_ParallelContinuous)->Arg(1440)->Arg(10080);
BENCHMARK_MAIN();
