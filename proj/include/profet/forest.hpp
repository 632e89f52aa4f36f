#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "profet/matrix.hpp"
#include "profet/parallel.hpp"

namespace profet {

// Hyper-parameters are pinned explicitly rather than inherited from any
// library default: 100 trees, unlimited depth, bootstrap on, every feature
// considered at every split, leaves down to a single sample.
struct ForestConfig {
    int n_trees = 100;
    int max_depth = 0;          // 0 = unlimited
    int min_samples_leaf = 1;
    bool bootstrap = true;
    int features_per_split = 0;  // 0 = all features

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf mean

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
    ForestConfig config;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
};

// CART regression trees with squared-error splits. Tree i trains on its own
// bootstrap resample drawn from seed ^ i, so the parallel path is
// bit-identical to serial execution. Equal-gain splits break ties to the
// lowest feature index, then the lowest threshold.
ForestModel fit_forest(const Matrix& X, std::span<const double> y, const ForestConfig& config,
                       std::uint64_t seed, ExecPolicy policy = default_exec_policy());

// Mean of the per-tree leaf values.
double predict_forest(const ForestModel& m, std::span<const double> x);

}  // namespace profet
