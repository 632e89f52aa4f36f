#include "profet/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "profet/rng.hpp"

namespace profet {

void ForestConfig::validate() const {
    if (n_trees < 1) throw ValidationError("forest needs at least one tree");
    if (max_depth < 0) throw ValidationError("max_depth must be >= 0");
    if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
    if (features_per_split < 0) throw ValidationError("features_per_split must be >= 0");
}

double RegressionTree::predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[i].is_leaf()) {
        i = (x[nodes[i].feature] < nodes[i].threshold) ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].value;
}

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double total_sse = std::numeric_limits<double>::infinity();
};

struct PendingNode {
    int node;
    std::vector<std::size_t> samples;
    int depth;
};

double mean_of(std::span<const double> y, const std::vector<std::size_t>& samples) {
    double s = 0.0;
    for (std::size_t i : samples) s += y[i];
    return s / static_cast<double>(samples.size());
}

bool all_equal(std::span<const double> y, const std::vector<std::size_t>& samples) {
    for (std::size_t i : samples)
        if (y[i] != y[samples.front()]) return false;
    return true;
}

// Best squared-error split over the given features. Candidates are scanned
// feature-ascending and threshold-ascending with a strict improvement test,
// which realizes the tie-break order.
SplitChoice best_split(const Matrix& X, std::span<const double> y,
                       const std::vector<std::size_t>& samples,
                       const std::vector<int>& features, int min_leaf,
                       std::vector<std::pair<double, double>>& scratch) {
    const std::size_t n = samples.size();
    SplitChoice best;
    for (int f : features) {
        scratch.clear();
        for (std::size_t i : samples) scratch.emplace_back(X.at(i, f), y[i]);
        std::sort(scratch.begin(), scratch.end());
        if (scratch.front().first == scratch.back().first) continue;  // constant feature

        double total_sum = 0.0, total_sq = 0.0;
        for (const auto& [xv, yv] : scratch) {
            (void)xv;
            total_sum += yv;
            total_sq += yv * yv;
        }
        double run_sum = 0.0, run_sq = 0.0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(min_leaf) < n; ++i) {
            run_sum += scratch[i].second;
            run_sq += scratch[i].second * scratch[i].second;
            if (i + 1 < static_cast<std::size_t>(min_leaf)) continue;
            if (scratch[i].first == scratch[i + 1].first) continue;
            double n_left = static_cast<double>(i + 1);
            double n_right = static_cast<double>(n - i - 1);
            double sse_left = run_sq - run_sum * run_sum / n_left;
            double sse_right =
                (total_sq - run_sq) - (total_sum - run_sum) * (total_sum - run_sum) / n_right;
            double total = sse_left + sse_right;
            if (total < best.total_sse) {
                double lo = scratch[i].first, hi = scratch[i + 1].first;
                double mid = lo + (hi - lo) / 2.0;
                // Adjacent representable values can round the midpoint onto
                // lo; fall back to hi so both children stay non-empty.
                if (!(mid > lo)) mid = hi;
                best = {f, mid, total};
            }
        }
    }
    return best;
}

RegressionTree build_tree(const Matrix& X, std::span<const double> y,
                          std::vector<std::size_t> samples, const ForestConfig& cfg,
                          rng::Engine& engine) {
    const int d = static_cast<int>(X.cols());
    RegressionTree tree;
    tree.nodes.emplace_back();

    std::vector<int> all_features(d);
    std::iota(all_features.begin(), all_features.end(), 0);
    std::vector<std::pair<double, double>> scratch;

    std::vector<PendingNode> stack;
    stack.push_back({0, std::move(samples), 0});
    while (!stack.empty()) {
        PendingNode cur = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = tree.nodes[cur.node];
        node.value = mean_of(y, cur.samples);

        const std::size_t n = cur.samples.size();
        bool splittable = n >= 2 * static_cast<std::size_t>(cfg.min_samples_leaf) &&
                          (cfg.max_depth == 0 || cur.depth < cfg.max_depth) &&
                          !all_equal(y, cur.samples);
        if (!splittable) continue;

        std::vector<int> features;
        if (cfg.features_per_split > 0 && cfg.features_per_split < d) {
            // Partial Fisher-Yates without replacement; re-sorted so the
            // scan order (and hence tie-breaking) stays index-ascending.
            std::vector<int> pool = all_features;
            for (int k = 0; k < cfg.features_per_split; ++k) {
                std::size_t j = k + engine.index(pool.size() - k);
                std::swap(pool[k], pool[j]);
            }
            features.assign(pool.begin(), pool.begin() + cfg.features_per_split);
            std::sort(features.begin(), features.end());
        } else {
            features = all_features;
        }

        SplitChoice split =
            best_split(X, y, cur.samples, features, cfg.min_samples_leaf, scratch);
        if (split.feature < 0) continue;  // no usable boundary

        std::vector<std::size_t> left, right;
        for (std::size_t i : cur.samples) {
            (X.at(i, split.feature) < split.threshold ? left : right).push_back(i);
        }
        const int left_node = static_cast<int>(tree.nodes.size());
        const int right_node = left_node + 1;
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left_node;
        node.right = right_node;
        tree.nodes.emplace_back();  // invalidates `node`
        tree.nodes.emplace_back();
        int depth = cur.depth + 1;
        // Push right first so the left child is processed (and numbered) in
        // a fixed order regardless of stack growth.
        stack.push_back({right_node, std::move(right), depth});
        stack.push_back({left_node, std::move(left), depth});
    }
    return tree;
}

}  // namespace

ForestModel fit_forest(const Matrix& X, std::span<const double> y, const ForestConfig& config,
                       std::uint64_t seed, ExecPolicy policy) {
    config.validate();
    const std::size_t n = X.rows();
    if (n == 0) throw ValidationError("fit_forest needs at least one sample");
    if (y.size() != n) throw ValidationError("fit_forest: row count does not match label count");
    if (config.features_per_split > static_cast<int>(X.cols()))
        throw ValidationError("features_per_split exceeds feature count");
    for (double v : X.data())
        if (!std::isfinite(v)) throw ValidationError("non-finite entry in feature matrix");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("non-finite entry in labels");

    ForestModel model;
    model.config = config;
    model.seed = seed;
    model.n_features = X.cols();
    model.trees.resize(config.n_trees);

    const int n_trees = config.n_trees;
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::Parallel)
    for (int t = 0; t < n_trees; ++t) {
        rng::Engine engine(seed ^ static_cast<std::uint64_t>(t));
        std::vector<std::size_t> samples(n);
        if (config.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) samples[i] = engine.index(n);
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        model.trees[t] = build_tree(X, y, std::move(samples), config, engine);
    }
    return model;
}

double predict_forest(const ForestModel& m, std::span<const double> x) {
    if (x.size() != m.n_features)
        throw ValidationError("predict_forest: expected " + std::to_string(m.n_features) +
                              " features, got " + std::to_string(x.size()));
    double sum = 0.0;
    for (const auto& tree : m.trees) sum += tree.predict(x);
    return sum / static_cast<double>(m.trees.size());
}

}  // namespace profet
