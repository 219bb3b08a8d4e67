#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "exfil/core.hpp"
#include "exfil/iforest.hpp"
#include "exfil/kde.hpp"
#include "exfil/knn.hpp"
#include "exfil/ocsvm.hpp"
#include "exfil/spectral.hpp"

namespace exfil {

enum class Representation { avg_dft, dft_e, dft_i, stft };
enum class LearnerKind { kde, ocsvm, iforest, knn };
enum class Preprocessing { none, standardize, log1p_standardize };

inline const char* representation_name(Representation r) {
    switch (r) {
        case Representation::avg_dft: return "avgDFT";
        case Representation::dft_e: return "DFT_E";
        case Representation::dft_i: return "DFT_I";
        case Representation::stft: return "STFT";
    }
    return "?";
}

inline const char* learner_name(LearnerKind k) {
    switch (k) {
        case LearnerKind::kde: return "kde";
        case LearnerKind::ocsvm: return "ocsvm";
        case LearnerKind::iforest: return "iforest";
        case LearnerKind::knn: return "knn";
    }
    return "?";
}

struct ComponentConfig {
    Representation representation = Representation::avg_dft;
    LearnerKind learner = LearnerKind::kde;
    Preprocessing preprocessing = Preprocessing::none;
    double fpr_budget = 0.0;  // 0 = allocate from the ensemble target

    double kde_bandwidth = 0.25;
    double ocsvm_nu = 0.0;     // 0 = derive from the component budget
    double ocsvm_gamma = 0.0;  // 0 = 1/dim heuristic
    std::size_t iforest_trees = 200;
    std::size_t iforest_subsample = 256;
    double iforest_contamination = 0.0;  // 0 = component budget
    std::size_t knn_k = 5;
    KnnMetric knn_metric = KnnMetric::euclidean;
};

enum class Combination { logical_or };

struct EnsembleConfig {
    std::vector<ComponentConfig> components;
    double target_fpr = 0.02;
    Combination combination = Combination::logical_or;
    std::size_t calibration_folds = 5;
};

// The paper's deployed trio: KDE on avgDFT, isolation forest on the
// normalized egress spectrum, nu-SVM on the spectrogram. DFT_I is the
// optional fourth component, off by default.
inline EnsembleConfig default_ensemble_config(bool include_dft_i = false) {
    EnsembleConfig cfg;
    cfg.components.push_back({Representation::avg_dft, LearnerKind::kde});
    cfg.components.push_back({Representation::dft_e, LearnerKind::iforest});
    if (include_dft_i) cfg.components.push_back({Representation::dft_i, LearnerKind::iforest});
    {
        ComponentConfig c{Representation::stft, LearnerKind::ocsvm};
        c.preprocessing = Preprocessing::log1p_standardize;
        cfg.components.push_back(c);
    }
    return cfg;
}

// Observed workstation budget split, avgDFT : DFT : STFT ~ 1.0 : 0.05 : 0.02
// percentage points; renormalized to the ensemble target.
inline double representation_budget_weight(Representation r) {
    switch (r) {
        case Representation::avg_dft: return 1.0;
        case Representation::dft_e: return 0.05;
        case Representation::dft_i: return 0.05;
        case Representation::stft: return 0.02;
    }
    return 1.0;
}

// Per-feature affine scaler, optionally preceded by log1p. Fit on training
// data, stored with the model.
struct Standardizer {
    bool use_log1p = false;
    bool identity = true;
    std::vector<double> mean;
    std::vector<double> inv_std;

    bool operator==(const Standardizer&) const = default;

    static Standardizer fit(const Matrix& X, Preprocessing prep) {
        Standardizer s;
        if (prep == Preprocessing::none) return s;
        s.identity = false;
        s.use_log1p = prep == Preprocessing::log1p_standardize;
        s.mean.assign(X.cols, 0.0);
        s.inv_std.assign(X.cols, 1.0);
        std::vector<double> var(X.cols, 0.0);
        for (std::size_t i = 0; i < X.rows; ++i) {
            const double* r = X.row(i);
            for (std::size_t j = 0; j < X.cols; ++j) {
                const double v = s.use_log1p ? std::log1p(std::max(0.0, r[j])) : r[j];
                s.mean[j] += v;
            }
        }
        for (double& v : s.mean) v /= static_cast<double>(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) {
            const double* r = X.row(i);
            for (std::size_t j = 0; j < X.cols; ++j) {
                const double v = s.use_log1p ? std::log1p(std::max(0.0, r[j])) : r[j];
                var[j] += (v - s.mean[j]) * (v - s.mean[j]);
            }
        }
        for (std::size_t j = 0; j < X.cols; ++j) {
            const double sd = std::sqrt(var[j] / static_cast<double>(X.rows));
            s.inv_std[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
        return s;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        if (identity) return x;
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double v = use_log1p ? std::log1p(std::max(0.0, x[j])) : x[j];
            out[j] = (v - mean[j]) * inv_std[j];
        }
        return out;
    }

    Matrix apply(const Matrix& X) const {
        if (identity) return X;
        Matrix out(X.rows, X.cols);
        for (std::size_t i = 0; i < X.rows; ++i) {
            const double* r = X.row(i);
            double* o = out.row(i);
            for (std::size_t j = 0; j < X.cols; ++j) {
                const double v = use_log1p ? std::log1p(std::max(0.0, r[j])) : r[j];
                o[j] = (v - mean[j]) * inv_std[j];
            }
        }
        return out;
    }
};

inline std::vector<double> extract_representation(const FeatureBundle& fb, Representation r) {
    switch (r) {
        case Representation::avg_dft: return {fb.avg_dft_ingress, fb.avg_dft_egress};
        case Representation::dft_e: return fb.dft_e;
        case Representation::dft_i: return fb.dft_i;
        case Representation::stft: return fb.stft;
    }
    throw ContractError("unknown representation");
}

// One trained component: learner bound to a representation, with its scaler,
// anomaly-score threshold, and the calibration curve (sorted normal scores)
// used for threshold re-allocation and ROC sweeps.
struct ComponentModel {
    ComponentConfig config;
    std::string name;
    Standardizer scaler;
    std::variant<KdeModel, OcsvmModel, IsolationForestModel, KnnModel> model;
    double threshold = 0.0;
    double fpr_budget = 0.0;
    std::vector<double> calibration_scores;  // ascending
    bool degenerate_training = false;

    // Unified convention: higher = more anomalous.
    double score(const std::vector<double>& raw) const {
        const std::vector<double> x = scaler.apply(raw);
        return std::visit(
            [&](const auto& m) -> double {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, KdeModel>) return -kde_score(m, x);
                else if constexpr (std::is_same_v<T, OcsvmModel>) return ocsvm_score(m, x);
                else if constexpr (std::is_same_v<T, IsolationForestModel>) return iforest_score(m, x);
                else return knn_score(m, x);
            },
            model);
    }

    bool is_anomaly(const std::vector<double>& raw) const { return score(raw) > threshold; }

    std::size_t input_dim() const {
        return std::visit(
            [](const auto& m) -> std::size_t {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, OcsvmModel>) return m.support_vectors.cols;
                else if constexpr (std::is_same_v<T, IsolationForestModel>) return m.n_features;
                else return m.training_points.cols;
            },
            model);
    }

    // Threshold on the calibration curve at a given false-positive budget.
    double threshold_for_budget(double budget) const {
        if (calibration_scores.empty()) return threshold;
        return quantile(calibration_scores, std::clamp(1.0 - budget, 0.0, 1.0));
    }
};

struct EnsembleModel {
    EnsembleConfig config;
    std::size_t dft_dim = 0;
    std::size_t stft_flat_dim = 0;
    std::uint64_t seed = 0;
    std::vector<ComponentModel> components;
    std::vector<std::string> warnings;
};

struct EnsembleVerdict {
    CommunicationKey key;
    std::map<std::string, bool> component_anomaly;
    std::map<std::string, double> component_scores;
    bool anomaly = false;
};

namespace detail {

inline Matrix representation_matrix(const std::vector<FeatureBundle>& bundles, Representation r) {
    Matrix X;
    for (const auto& fb : bundles) X.push_row(extract_representation(fb, r));
    return X;
}

inline bool all_rows_identical(const Matrix& X) {
    for (std::size_t i = 1; i < X.rows; ++i)
        for (std::size_t j = 0; j < X.cols; ++j)
            if (X.at(i, j) != X.at(0, j)) return false;
    return X.rows > 0;
}

// Deterministic fold assignment from a seeded shuffle.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
    return fold;
}

struct FittedLearner {
    std::variant<KdeModel, OcsvmModel, IsolationForestModel, KnnModel> model;
    std::vector<double> training_scores;
};

inline FittedLearner fit_learner(const Matrix& X, const ComponentConfig& cfg, double budget,
                                 std::uint64_t seed, bool want_training_scores) {
    FittedLearner out;
    switch (cfg.learner) {
        case LearnerKind::kde: {
            KdeModel m = kde_fit(X, cfg.kde_bandwidth);
            if (want_training_scores)
                for (std::size_t i = 0; i < X.rows; ++i)
                    out.training_scores.push_back(
                        -kde_score(m, std::vector<double>(X.row(i), X.row(i) + X.cols)));
            out.model = std::move(m);
            break;
        }
        case LearnerKind::knn: {
            KnnModel m = knn_fit(X, std::min(cfg.knn_k, X.rows), cfg.knn_metric);
            if (want_training_scores)
                for (std::size_t i = 0; i < X.rows; ++i)
                    out.training_scores.push_back(
                        knn_score(m, std::vector<double>(X.row(i), X.row(i) + X.cols)));
            out.model = std::move(m);
            break;
        }
        case LearnerKind::iforest: {
            const double contamination =
                cfg.iforest_contamination > 0.0 ? cfg.iforest_contamination : std::max(budget, 1e-4);
            IsolationForestModel m =
                iforest_fit(X, cfg.iforest_trees, std::min(cfg.iforest_subsample, X.rows),
                            contamination, seed);
            if (want_training_scores)
                for (std::size_t i = 0; i < X.rows; ++i)
                    out.training_scores.push_back(
                        iforest_score(m, std::vector<double>(X.row(i), X.row(i) + X.cols)));
            out.model = std::move(m);
            break;
        }
        case LearnerKind::ocsvm: {
            const double nu_floor = 1.0 / static_cast<double>(X.rows);
            const double nu = cfg.ocsvm_nu > 0.0 ? cfg.ocsvm_nu
                                                 : std::clamp(budget, nu_floor, 0.5);
            const double gamma =
                cfg.ocsvm_gamma > 0.0 ? cfg.ocsvm_gamma : 1.0 / static_cast<double>(X.cols);
            OcsvmModel m = ocsvm_fit(X, nu, gamma);
            if (want_training_scores)
                for (std::size_t i = 0; i < X.rows; ++i)
                    out.training_scores.push_back(
                        ocsvm_score(m, std::vector<double>(X.row(i), X.row(i) + X.cols)));
            out.model = std::move(m);
            break;
        }
    }
    return out;
}

inline double score_variant(const std::variant<KdeModel, OcsvmModel, IsolationForestModel, KnnModel>& v,
                            const std::vector<double>& x) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KdeModel>) return -kde_score(m, x);
            else if constexpr (std::is_same_v<T, OcsvmModel>) return ocsvm_score(m, x);
            else if constexpr (std::is_same_v<T, IsolationForestModel>) return iforest_score(m, x);
            else return knn_score(m, x);
        },
        v);
}

}  // namespace detail

// Splits the ensemble false-positive budget across components: explicit
// per-component overrides are honored, the remainder is shared among the
// rest proportionally to the observed workstation split.
inline std::vector<double> allocate_fpr_budgets(const EnsembleConfig& cfg) {
    std::vector<double> budgets(cfg.components.size(), 0.0);
    double remaining = cfg.target_fpr;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < cfg.components.size(); ++i) {
        if (cfg.components[i].fpr_budget > 0.0) {
            budgets[i] = cfg.components[i].fpr_budget;
            remaining -= budgets[i];
        } else {
            weight_sum += representation_budget_weight(cfg.components[i].representation);
        }
    }
    remaining = std::max(remaining, 0.0);
    for (std::size_t i = 0; i < cfg.components.size(); ++i) {
        if (cfg.components[i].fpr_budget > 0.0) continue;
        budgets[i] = remaining * representation_budget_weight(cfg.components[i].representation) /
                     std::max(weight_sum, 1e-12);
    }
    return budgets;
}

// Fits every component on its representation slice and sets thresholds so
// the cross-validated ensemble FPR tracks the target. Each component's
// threshold is the quantile of its pooled out-of-fold scores at the
// component budget (falling back to training scores on tiny corpora); the
// learner-internal mechanisms (nu, contamination) still shape the models.
inline EnsembleModel train_ensemble(const std::vector<FeatureBundle>& bundles,
                                    const EnsembleConfig& config, std::uint64_t seed) {
    if (bundles.empty()) throw ContractError("train_ensemble: no training bundles");
    if (config.components.empty()) throw ConfigError("train_ensemble: ensemble has no components");
    if (config.target_fpr <= 0.0 || config.target_fpr >= 0.5)
        throw ConfigError("train_ensemble: target_fpr must lie in (0, 0.5)");

    EnsembleModel model;
    model.config = config;
    model.seed = seed;
    model.dft_dim = bundles.front().dft_e.size();
    model.stft_flat_dim = bundles.front().stft.size();
    if (bundles.size() < 50)
        model.warnings.push_back("training set has fewer than 50 communications (" +
                                 std::to_string(bundles.size()) + "); results may be unstable");

    const std::vector<double> budgets = allocate_fpr_budgets(config);
    for (std::size_t ci = 0; ci < config.components.size(); ++ci) {
        const ComponentConfig& ccfg = config.components[ci];
        const std::uint64_t cseed = derive_seed(seed, ci);
        ComponentModel comp;
        comp.config = ccfg;
        comp.name = representation_name(ccfg.representation);
        comp.fpr_budget = budgets[ci];

        Matrix raw = detail::representation_matrix(bundles, ccfg.representation);
        if (detail::all_rows_identical(raw)) {
            comp.degenerate_training = true;
            model.warnings.push_back(std::string(comp.name) +
                                     ": all training vectors identical; component trained but flagged");
        }
        comp.scaler = Standardizer::fit(raw, ccfg.preprocessing);
        const Matrix X = comp.scaler.apply(raw);

        if (X.rows >= 2 * config.calibration_folds) {
            // Out-of-fold scores drive the threshold so held-out FPR matches
            // the budget.
            const std::size_t folds = config.calibration_folds;
            const auto fold = detail::fold_assignment(X.rows, folds, derive_seed(cseed, 0xca11));
            std::vector<double> oof_scores(X.rows);
            for (std::size_t f = 0; f < folds; ++f) {
                Matrix train;
                for (std::size_t i = 0; i < X.rows; ++i)
                    if (fold[i] != f) train.push_row(std::vector<double>(X.row(i), X.row(i) + X.cols));
                auto fitted = detail::fit_learner(train, ccfg, budgets[ci], derive_seed(cseed, f + 1),
                                                 false);
                for (std::size_t i = 0; i < X.rows; ++i)
                    if (fold[i] == f)
                        oof_scores[i] = detail::score_variant(
                            fitted.model, std::vector<double>(X.row(i), X.row(i) + X.cols));
            }
            auto fitted = detail::fit_learner(X, ccfg, budgets[ci], cseed, false);
            comp.model = std::move(fitted.model);
            comp.calibration_scores = std::move(oof_scores);
        } else {
            auto fitted = detail::fit_learner(X, ccfg, budgets[ci], cseed, true);
            comp.model = std::move(fitted.model);
            comp.calibration_scores = std::move(fitted.training_scores);
        }
        std::sort(comp.calibration_scores.begin(), comp.calibration_scores.end());
        comp.threshold = comp.threshold_for_budget(budgets[ci]);
        model.components.push_back(std::move(comp));
    }
    return model;
}

inline EnsembleVerdict decide(const EnsembleModel& model, const FeatureBundle& bundle) {
    EnsembleVerdict v;
    v.key = bundle.key;
    for (const auto& comp : model.components) {
        const std::vector<double> x = extract_representation(bundle, comp.config.representation);
        if (x.size() != comp.input_dim())
            throw ContractError(std::string("decide: representation ") + comp.name +
                                " has dimension " + std::to_string(x.size()) + ", model expects " +
                                std::to_string(comp.input_dim()));
        const double s = comp.score(x);
        const bool a = s > comp.threshold;
        v.component_scores[comp.name] = s;
        v.component_anomaly[comp.name] = a;
        v.anomaly = v.anomaly || a;
    }
    return v;
}

}  // namespace exfil
