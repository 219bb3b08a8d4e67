#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "exfil/core.hpp"

namespace exfil {

namespace detail {

inline constexpr double kEulerMascheroni = 0.5772156649015328606;

// Average unsuccessful-BST-search path length, c(n) = 2 H(n-1) - 2(n-1)/n.
inline double average_path_length(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const double m = static_cast<double>(n);
    return 2.0 * (std::log(m - 1.0) + kEulerMascheroni) - 2.0 * (m - 1.0) / m;
}

}  // namespace detail

struct IsolationTree {
    struct Node {
        int feature = -1;       // -1 marks an external node
        double split = 0.0;
        int left = -1;
        int right = -1;
        std::size_t size = 0;   // external nodes: points terminating here

        bool operator==(const Node&) const = default;
    };
    std::vector<Node> nodes;

    bool operator==(const IsolationTree&) const = default;
};

struct IsolationForestModel {
    std::vector<IsolationTree> trees;
    std::size_t n_features = 0;
    std::size_t subsample_size = 256;
    double contamination = 0.01;
    double threshold = 0.5;

    bool operator==(const IsolationForestModel&) const = default;
};

namespace detail {

inline int build_isolation_node(IsolationTree& tree, const Matrix& X, std::vector<std::size_t>& idx,
                                std::size_t begin, std::size_t end, std::size_t depth,
                                std::size_t max_depth, std::mt19937_64& rng) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    const std::size_t n = end - begin;
    if (n <= 1 || depth >= max_depth) {
        tree.nodes[node_id].size = n;
        return node_id;
    }

    // Pick a feature with spread; give up after cols attempts (constant data).
    std::uniform_int_distribution<std::size_t> feat_dist(0, X.cols - 1);
    int feature = -1;
    double lo = 0.0, hi = 0.0;
    for (std::size_t attempt = 0; attempt < X.cols; ++attempt) {
        const std::size_t f = feat_dist(rng);
        lo = hi = X.at(idx[begin], f);
        for (std::size_t i = begin + 1; i < end; ++i) {
            const double v = X.at(idx[i], f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo) {
            feature = static_cast<int>(f);
            break;
        }
    }
    if (feature < 0) {
        tree.nodes[node_id].size = n;
        return node_id;
    }

    std::uniform_real_distribution<double> split_dist(lo, hi);
    const double split = split_dist(rng);
    const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                       idx.begin() + static_cast<std::ptrdiff_t>(end),
                                       [&](std::size_t i) { return X.at(i, static_cast<std::size_t>(feature)) < split; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    if (mid == begin || mid == end) {
        tree.nodes[node_id].size = n;
        return node_id;
    }
    tree.nodes[node_id].feature = feature;
    tree.nodes[node_id].split = split;
    const int left = build_isolation_node(tree, X, idx, begin, mid, depth + 1, max_depth, rng);
    const int right = build_isolation_node(tree, X, idx, mid, end, depth + 1, max_depth, rng);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
}

inline double isolation_path_length(const IsolationTree& tree, const double* x) {
    double depth = 0.0;
    int node = 0;
    while (true) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        if (nd.feature < 0) return depth + average_path_length(nd.size);
        node = x[nd.feature] < nd.split ? nd.left : nd.right;
        depth += 1.0;
    }
}

}  // namespace detail

inline double iforest_score(const IsolationForestModel& m, const std::vector<double>& x);

// Per-tree RNGs derive from the master seed by counter-mode splitting.
inline IsolationForestModel iforest_fit(const Matrix& X, std::size_t n_trees, std::size_t subsample_size,
                                        double contamination, std::uint64_t seed) {
    if (X.rows == 0) throw ContractError("iforest_fit: empty training set");
    if (n_trees < 1) throw ConfigError("iforest_fit: n_trees must be >= 1");
    if (subsample_size > X.rows)
        throw ConfigError("iforest_fit: subsample_size exceeds the training set size");
    if (contamination < 0.0 || contamination > 0.5)
        throw ConfigError("iforest_fit: contamination must lie in [0, 0.5]");

    IsolationForestModel m;
    m.n_features = X.cols;
    m.subsample_size = subsample_size;
    m.contamination = contamination;
    m.trees.reserve(n_trees);

    const std::size_t max_depth =
        static_cast<std::size_t>(std::ceil(std::log2(std::max<std::size_t>(subsample_size, 2))));
    std::vector<std::size_t> all(X.rows);
    std::iota(all.begin(), all.end(), 0);

    for (std::size_t t = 0; t < n_trees; ++t) {
        std::mt19937_64 rng(derive_seed(seed, t));
        std::vector<std::size_t> idx;
        idx.reserve(subsample_size);
        std::sample(all.begin(), all.end(), std::back_inserter(idx), subsample_size, rng);
        IsolationTree tree;
        detail::build_isolation_node(tree, X, idx, 0, idx.size(), 0, max_depth, rng);
        m.trees.push_back(std::move(tree));
    }

    // Threshold from the training-score quantile at the contamination level.
    std::vector<double> scores(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i)
        scores[i] = iforest_score(m, std::vector<double>(X.row(i), X.row(i) + X.cols));
    m.threshold = quantile(scores, 1.0 - contamination);
    return m;
}

// s(x) = 2^(-E[h(x)] / c(subsample_size)), in (0, 1).
inline double iforest_score(const IsolationForestModel& m, const std::vector<double>& x) {
    if (m.trees.empty()) throw ContractError("iforest_score: model has no trees");
    double mean_path = 0.0;
    for (const auto& tree : m.trees) mean_path += detail::isolation_path_length(tree, x.data());
    mean_path /= static_cast<double>(m.trees.size());
    return std::pow(2.0, -mean_path / detail::average_path_length(m.subsample_size));
}

inline bool iforest_is_anomaly(const IsolationForestModel& m, const std::vector<double>& x) {
    return iforest_score(m, x) >= m.threshold;
}

}  // namespace exfil
