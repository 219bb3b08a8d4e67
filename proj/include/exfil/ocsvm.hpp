#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "exfil/core.hpp"

namespace exfil {

// Scholkopf nu-one-class SVM with Gaussian kernel, trained by an SMO-style
// pairwise optimizer over the dual:
//   min 1/2 a'Qa  s.t.  0 <= a_i <= 1/(nu l),  sum a_i = 1,
// with Q_ij = exp(-gamma ||x_i - x_j||^2). Decision f(x) = sum a_i K(x_i, x) - rho;
// anomaly iff f(x) < 0.
struct OcsvmModel {
    Matrix support_vectors;
    std::vector<double> dual_coefficients;
    double rho = 0.0;
    double nu = 0.1;
    double gamma = 1.0;
    double threshold = 0.0;  // on score = rho - sum a_i K; ensemble tuner may shift it

    bool operator==(const OcsvmModel&) const = default;
};

struct OcsvmFitOptions {
    double kkt_tolerance = 1e-6;
    std::size_t max_iterations = 100000;
};

inline OcsvmModel ocsvm_fit(const Matrix& X, double nu, double gamma,
                            const OcsvmFitOptions& opts = {}) {
    const std::size_t l = X.rows;
    if (l < 2) throw ContractError("ocsvm_fit: need at least 2 training points");
    if (nu <= 0.0 || nu >= 1.0) throw ConfigError("ocsvm_fit: nu must lie in (0, 1)");
    if (gamma <= 0.0) throw ConfigError("ocsvm_fit: gamma must be positive");

    const double C = 1.0 / (nu * static_cast<double>(l));

    // Full kernel matrix; training sets here are a few thousand points.
    std::vector<double> sq_norm(l, 0.0);
    for (std::size_t i = 0; i < l; ++i) {
        const double* xi = X.row(i);
        for (std::size_t k = 0; k < X.cols; ++k) sq_norm[i] += xi[k] * xi[k];
    }
    std::vector<double> Q(l * l);
    for (std::size_t i = 0; i < l; ++i) {
        const double* xi = X.row(i);
        Q[i * l + i] = 1.0;
        for (std::size_t j = i + 1; j < l; ++j) {
            const double* xj = X.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < X.cols; ++k) dot += xi[k] * xj[k];
            const double d2 = std::max(0.0, sq_norm[i] + sq_norm[j] - 2.0 * dot);
            const double kij = std::exp(-gamma * d2);
            Q[i * l + j] = kij;
            Q[j * l + i] = kij;
        }
    }

    // Standard nu-initialization: the first floor(nu l) points at the box
    // bound, a fractional remainder on the next.
    std::vector<double> alpha(l, 0.0);
    {
        const std::size_t n_full = static_cast<std::size_t>(nu * static_cast<double>(l));
        double assigned = 0.0;
        for (std::size_t i = 0; i < n_full && i < l; ++i) {
            alpha[i] = C;
            assigned += C;
        }
        if (assigned < 1.0 && n_full < l) alpha[n_full] = 1.0 - assigned;
    }

    std::vector<double> grad(l, 0.0);  // G = Q alpha
    for (std::size_t i = 0; i < l; ++i) {
        if (alpha[i] == 0.0) continue;
        const double a = alpha[i];
        const double* qi = Q.data() + i * l;
        for (std::size_t j = 0; j < l; ++j) grad[j] += a * qi[j];
    }

    double gap = 0.0;
    bool converged = false;
    const double box_eps = 1e-12 * C;
    for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
        // Maximal violating pair.
        std::size_t up = l, low = l;
        double g_min = std::numeric_limits<double>::infinity();
        double g_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < l; ++i) {
            if (alpha[i] < C - box_eps && grad[i] < g_min) {
                g_min = grad[i];
                up = i;
            }
            if (alpha[i] > box_eps && grad[i] > g_max) {
                g_max = grad[i];
                low = i;
            }
        }
        gap = g_max - g_min;
        if (up == l || low == l || gap < opts.kkt_tolerance) {
            converged = true;
            break;
        }

        const double* q_up = Q.data() + up * l;
        const double* q_low = Q.data() + low * l;
        const double curvature = std::max(q_up[up] + q_low[low] - 2.0 * q_up[low], 1e-12);
        double delta = gap / curvature;
        delta = std::min(delta, C - alpha[up]);
        delta = std::min(delta, alpha[low]);
        alpha[up] += delta;
        alpha[low] -= delta;
        for (std::size_t j = 0; j < l; ++j) grad[j] += delta * (q_up[j] - q_low[j]);
    }
    if (!converged)
        throw ConvergenceError("ocsvm_fit: SMO did not converge; duality gap " + std::to_string(gap),
                               gap);

    // rho = min gradient over non-bound points. Any value in the KKT interval
    // is valid at the optimum; the minimum keeps f(x_i) >= 0 for every point
    // with alpha_i < C despite the residual tolerance, so only bound points
    // (at most ceil(nu l) of them) can score as training outliers.
    double rho = std::numeric_limits<double>::infinity();
    std::size_t n_below = 0;
    for (std::size_t i = 0; i < l; ++i)
        if (alpha[i] < C - box_eps) {
            rho = std::min(rho, grad[i]);
            ++n_below;
        }
    if (n_below == 0) {
        rho = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < l; ++i) rho = std::max(rho, grad[i]);
    }

    OcsvmModel m;
    m.nu = nu;
    m.gamma = gamma;
    m.rho = rho;
    const double sv_eps = 1e-12;
    std::size_t n_sv = 0;
    for (std::size_t i = 0; i < l; ++i)
        if (alpha[i] > sv_eps) ++n_sv;
    m.support_vectors = Matrix(n_sv, X.cols);
    m.dual_coefficients.reserve(n_sv);
    std::size_t r = 0;
    for (std::size_t i = 0; i < l; ++i) {
        if (alpha[i] <= sv_eps) continue;
        const double* xi = X.row(i);
        std::copy(xi, xi + X.cols, m.support_vectors.row(r));
        m.dual_coefficients.push_back(alpha[i]);
        ++r;
    }
    return m;
}

inline double ocsvm_decision(const OcsvmModel& m, const std::vector<double>& x) {
    if (x.size() != m.support_vectors.cols) throw ContractError("ocsvm_decision: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < m.support_vectors.rows; ++i)
        sum += m.dual_coefficients[i] *
               std::exp(-m.gamma * squared_distance(x.data(), m.support_vectors.row(i), x.size()));
    return sum - m.rho;
}

// Higher = more anomalous, consistent with the other learners.
inline double ocsvm_score(const OcsvmModel& m, const std::vector<double>& x) {
    return -ocsvm_decision(m, x);
}

inline bool ocsvm_is_anomaly(const OcsvmModel& m, const std::vector<double>& x) {
    return ocsvm_score(m, x) > m.threshold;
}

// 1/2 a'Qa for a trained model; used to compare against an independent QP
// solver on small instances.
inline double ocsvm_dual_objective(const OcsvmModel& m) {
    const std::size_t n = m.support_vectors.rows;
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            obj += 0.5 * m.dual_coefficients[i] * m.dual_coefficients[j] *
                   std::exp(-m.gamma * squared_distance(m.support_vectors.row(i),
                                                        m.support_vectors.row(j),
                                                        m.support_vectors.cols));
    return obj;
}

}  // namespace exfil
