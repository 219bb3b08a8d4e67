#pragma once

#include <cmath>
#include <vector>

#include "exfil/core.hpp"

namespace exfil {

// Gaussian kernel density novelty model. Scores are fully normalized
// log-densities so they stay comparable across bandwidths during grid
// search; decide() flags points whose log-density falls below threshold.
struct KdeModel {
    Matrix training_points;
    double bandwidth = 0.0;
    double threshold = std::numeric_limits<double>::lowest();  // finite so models serialize cleanly

    bool operator==(const KdeModel&) const = default;
};

inline KdeModel kde_fit(const Matrix& X, double bandwidth) {
    if (X.rows == 0) throw ContractError("kde_fit: empty training set");
    if (bandwidth <= 0.0) throw ConfigError("kde_fit: bandwidth must be positive");
    KdeModel m;
    m.training_points = X;
    m.bandwidth = bandwidth;
    return m;
}

// log[(1/l) sum_i exp(-||x - x_i||^2 / 2h^2) / (2 pi h^2)^(d/2)]
inline double kde_score(const KdeModel& m, const std::vector<double>& x) {
    if (x.size() != m.training_points.cols) throw ContractError("kde_score: dimension mismatch");
    const double h2 = m.bandwidth * m.bandwidth;
    const std::size_t d = m.training_points.cols;
    std::vector<double> exponents(m.training_points.rows);
    for (std::size_t i = 0; i < m.training_points.rows; ++i)
        exponents[i] = -squared_distance(x.data(), m.training_points.row(i), d) / (2.0 * h2);
    const double log_z = 0.5 * static_cast<double>(d) * std::log(2.0 * M_PI * h2);
    return log_sum_exp(exponents) - std::log(static_cast<double>(m.training_points.rows)) - log_z;
}

inline bool kde_is_anomaly(const KdeModel& m, const std::vector<double>& x) {
    return kde_score(m, x) < m.threshold;
}

}  // namespace exfil
