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
#include <optional>
#include <vector>

#include "portshare/features.hpp"
#include "portshare/weights.hpp"

namespace portshare {

struct ForestConfig {
    int n_trees = 100;
    std::optional<int> max_depth;  ///< unlimited when empty
    int features_per_split = 6;    ///< ceil(sqrt(35))
    bool bootstrap = true;
    /// Weight classes inversely to their frequency in the Gini computation.
    bool balance_classes = true;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p_malicious = 0.0;  ///< class-weighted fraction at this node
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    /// Weighted Gini decrease per feature, normalized to sum 1 (all zero for a stump).
    std::array<double, kNumFeatures> importance{};
    /// Rows of the training matrix left out of this tree's bootstrap sample.
    std::vector<std::uint32_t> out_of_bag;

    double predict(const FeatureRow& row) const;
};

/// Random Forest classifier over labeled feature windows: CART trees with the
/// Gini criterion, bootstrap rows, and a random feature subset at each split.
class RandomForest {
public:
    std::vector<DecisionTree> trees;

    /// Mean leaf probability of the malicious class.
    double predict_proba(const FeatureRow& row) const;
    /// Accuracy of majority votes from trees that did not see each row.
    double oob_accuracy(const FeatureMatrix& training) const;
};

/// Trains on the rows labeled benign or malicious; unlabeled rows are ignored.
/// Throws ValidationError when only one class is present.
RandomForest train_forest(const FeatureMatrix& labeled, const ForestConfig& config);

/// Mean decrease in impurity, normalized to sum 1.
WeightVector feature_weights(const RandomForest& forest);

}  // namespace portshare
