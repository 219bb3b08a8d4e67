#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "exfil/core.hpp"

namespace exfil {

enum class KnnMetric { euclidean, cosine };

// One-class k-NN: a point is anomalous when its mean distance to the k
// nearest training points exceeds the threshold.
struct KnnModel {
    Matrix training_points;
    std::size_t k = 1;
    KnnMetric metric = KnnMetric::euclidean;
    double threshold = std::numeric_limits<double>::max();  // finite so models serialize cleanly

    bool operator==(const KnnModel&) const = default;
};

inline KnnModel knn_fit(const Matrix& X, std::size_t k, KnnMetric metric = KnnMetric::euclidean) {
    if (X.rows == 0) throw ContractError("knn_fit: empty training set");
    if (k < 1 || k > X.rows) throw ConfigError("knn_fit: k must lie in [1, #training points]");
    KnnModel m;
    m.training_points = X;
    m.k = k;
    m.metric = metric;
    return m;
}

namespace detail {

inline double knn_distance(const double* a, const double* b, std::size_t d, KnnMetric metric) {
    if (metric == KnnMetric::euclidean) return std::sqrt(squared_distance(a, b, d));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw ContractError("cosine distance undefined for a zero-norm vector");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

inline double knn_score(const KnnModel& m, const std::vector<double>& x) {
    if (x.size() != m.training_points.cols) throw ContractError("knn_score: dimension mismatch");
    std::vector<double> dists(m.training_points.rows);
    for (std::size_t i = 0; i < m.training_points.rows; ++i)
        dists[i] = detail::knn_distance(x.data(), m.training_points.row(i), m.training_points.cols,
                                        m.metric);
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(m.k - 1), dists.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < m.k; ++i) sum += dists[i];
    return sum / static_cast<double>(m.k);
}

inline bool knn_is_anomaly(const KnnModel& m, const std::vector<double>& x) {
    return knn_score(m, x) > m.threshold;
}

}  // namespace exfil
