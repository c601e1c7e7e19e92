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

#include "portshare/forest.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "portshare/errors.hpp"

namespace portshare {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct Sample {
    std::uint32_t row;
    double weight;
    bool malicious;
};

double gini(double w0, double w1)
{
    const double w = w0 + w1;
    if (w <= 0.0) return 0.0;
    return 1.0 - (w0 * w0 + w1 * w1) / (w * w);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<FeatureRow>& rows, const ForestConfig& config, std::mt19937_64& rng)
        : rows_(rows), config_(config), rng_(rng)
    {
    }

    DecisionTree build(std::vector<Sample> samples)
    {
        tree_.nodes.clear();
        tree_.importance.fill(0.0);
        grow(samples, 0);
        double total = 0.0;
        for (double v : tree_.importance) total += v;
        if (total > 0.0) {
            for (double& v : tree_.importance) v /= total;
        }
        return std::move(tree_);
    }

private:
    int grow(std::vector<Sample>& samples, int depth)
    {
        double w0 = 0.0, w1 = 0.0;
        for (const auto& s : samples) (s.malicious ? w1 : w0) += s.weight;
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[id].p_malicious = (w0 + w1) > 0.0 ? w1 / (w0 + w1) : 0.0;

        const bool depth_ok = !config_.max_depth || depth < *config_.max_depth;
        if (w0 == 0.0 || w1 == 0.0 || samples.size() < 2 || !depth_ok) return id;

        const Split best = find_split(samples, w0, w1);
        if (best.feature < 0) return id;

        std::vector<Sample> left, right;
        for (const auto& s : samples) {
            (rows_[s.row][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();
        tree_.importance[static_cast<std::size_t>(best.feature)] += best.decrease;

        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = tree_.nodes[id];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    Split find_split(const std::vector<Sample>& samples, double w0, double w1)
    {
        const double parent = (w0 + w1) * gini(w0, w1);
        std::array<int, kNumFeatures> order{};
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng_);

        // Visit features in random order until enough non-constant ones were seen,
        // then evaluate those in index order so ties resolve to the lowest index.
        std::vector<int> candidates;
        for (int f : order) {
            if (static_cast<int>(candidates.size()) >= config_.features_per_split) break;
            const double first = rows_[samples.front().row][static_cast<std::size_t>(f)];
            bool constant = true;
            for (const auto& s : samples) {
                if (rows_[s.row][static_cast<std::size_t>(f)] != first) {
                    constant = false;
                    break;
                }
            }
            if (!constant) candidates.push_back(f);
        }
        std::sort(candidates.begin(), candidates.end());

        Split best;
        std::vector<std::pair<double, const Sample*>> sorted(samples.size());
        for (int f : candidates) {
            for (std::size_t i = 0; i < samples.size(); ++i) {
                sorted[i] = {rows_[samples[i].row][static_cast<std::size_t>(f)], &samples[i]};
            }
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double l0 = 0.0, l1 = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                (sorted[i].second->malicious ? l1 : l0) += sorted[i].second->weight;
                if (sorted[i].first == sorted[i + 1].first) continue;
                const double r0 = w0 - l0, r1 = w1 - l1;
                const double decrease = parent - (l0 + l1) * gini(l0, l1) - (r0 + r1) * gini(r0, r1);
                if (decrease > best.decrease) {
                    best.feature = f;
                    best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    // Midpoint can round up onto the right value for adjacent doubles.
                    if (!(best.threshold < sorted[i + 1].first)) best.threshold = sorted[i].first;
                    best.decrease = decrease;
                }
            }
        }
        // Gains below rounding noise are not splits.
        if (best.decrease <= 1e-12 * parent) best.feature = -1;
        return best;
    }

    const std::vector<FeatureRow>& rows_;
    const ForestConfig& config_;
    std::mt19937_64& rng_;
    DecisionTree tree_;
};

}  // namespace

void ForestConfig::validate() const
{
    if (n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
    if (features_per_split < 1 || features_per_split > static_cast<int>(kNumFeatures)) {
        throw ConfigError("forest: features_per_split must be in [1, 35]");
    }
    if (max_depth && *max_depth < 1) throw ConfigError("forest: max_depth must be >= 1");
}

double DecisionTree::predict(const FeatureRow& row) const
{
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].p_malicious;
}

double RandomForest::predict_proba(const FeatureRow& row) const
{
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(row);
    return trees.empty() ? 0.0 : s / static_cast<double>(trees.size());
}

double RandomForest::oob_accuracy(const FeatureMatrix& training) const
{
    std::vector<double> votes(training.size(), 0.0);
    std::vector<int> n_votes(training.size(), 0);
    for (const auto& t : trees) {
        for (auto r : t.out_of_bag) {
            votes[r] += t.predict(training.rows[r]);
            ++n_votes[r];
        }
    }
    std::size_t correct = 0, counted = 0;
    for (std::size_t r = 0; r < training.size(); ++r) {
        if (n_votes[r] == 0 || training.labels[r] == Label::unlabeled) continue;
        const bool predicted = votes[r] / n_votes[r] > 0.5;
        correct += predicted == (training.labels[r] == Label::malicious) ? 1 : 0;
        ++counted;
    }
    if (counted == 0) throw ValidationError("oob_accuracy: no out-of-bag rows");
    return static_cast<double>(correct) / static_cast<double>(counted);
}

RandomForest train_forest(const FeatureMatrix& labeled, const ForestConfig& config)
{
    config.validate();
    std::vector<std::uint32_t> usable;
    std::size_t n_mal = 0;
    for (std::size_t r = 0; r < labeled.size(); ++r) {
        if (labeled.labels[r] == Label::unlabeled) continue;
        usable.push_back(static_cast<std::uint32_t>(r));
        n_mal += labeled.labels[r] == Label::malicious ? 1 : 0;
    }
    const std::size_t n_ben = usable.size() - n_mal;
    if (usable.size() < 2) throw ValidationError("train_forest: need at least two labeled rows");
    if (n_mal == 0 || n_ben == 0) {
        throw ValidationError("train_forest: only one class present (" + std::to_string(n_mal) +
                              " malicious); relax the detection threshold");
    }
    const double n = static_cast<double>(usable.size());
    const double cw_mal = config.balance_classes ? n / (2.0 * static_cast<double>(n_mal)) : 1.0;
    const double cw_ben = config.balance_classes ? n / (2.0 * static_cast<double>(n_ben)) : 1.0;

    RandomForest forest;
    forest.trees.resize(static_cast<std::size_t>(config.n_trees));
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < config.n_trees; ++t) {
        std::mt19937_64 rng(splitmix64(config.rng_seed ^ splitmix64(static_cast<std::uint64_t>(t))));
        std::vector<int> multiplicity(usable.size(), config.bootstrap ? 0 : 1);
        if (config.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
            for (std::size_t i = 0; i < usable.size(); ++i) ++multiplicity[pick(rng)];
        }
        std::vector<Sample> samples;
        std::vector<std::uint32_t> oob;
        for (std::size_t i = 0; i < usable.size(); ++i) {
            const bool mal = labeled.labels[usable[i]] == Label::malicious;
            if (multiplicity[i] == 0) {
                oob.push_back(usable[i]);
                continue;
            }
            samples.push_back({usable[i], multiplicity[i] * (mal ? cw_mal : cw_ben), mal});
        }
        TreeBuilder builder(labeled.rows, config, rng);
        DecisionTree tree = builder.build(std::move(samples));
        tree.out_of_bag = std::move(oob);
        forest.trees[static_cast<std::size_t>(t)] = std::move(tree);
    }
    return forest;
}

WeightVector feature_weights(const RandomForest& forest)
{
    std::array<double, kNumFeatures> total{};
    for (const auto& t : forest.trees) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) total[f] += t.importance[f];
    }
    double sum = 0.0;
    for (double v : total) sum += v;
    if (!(sum > 0.0)) throw ValidationError("feature_weights: forest has no impurity decrease");
    return WeightVector::normalized(total);
}

}  // namespace portshare
