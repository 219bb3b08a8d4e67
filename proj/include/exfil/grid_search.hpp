#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "exfil/ensemble.hpp"
#include "exfil/eval.hpp"
#include "exfil/flow.hpp"
#include "exfil/spectral.hpp"

namespace exfil {

// Feature-space ("outer") search axes.
struct OuterGrid {
    std::vector<std::size_t> dft_dims = {250, 500, 1000, 2000};
    std::vector<std::size_t> stft_dims = {20, 40, 80, 160};
    std::vector<double> stft_window_hours = {2, 4, 8, 16};
};

// Model-parameter ("inner") search axes, one block per learner. The
// defaults cover the published protocol; the top of the log10 nu and
// contamination ranges is clamped to 0.5 since 1.0 is infeasible for
// either parameter.
struct InnerGrid {
    std::vector<double> kde_bandwidths;                      // filled by default_inner_grid
    std::vector<double> ocsvm_nus = {1e-4, 1e-3, 1e-2, 1e-1, 0.5};
    std::vector<double> ocsvm_gammas = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> iforest_contaminations = {1e-4, 1e-3, 1e-2, 1e-1, 0.5};
    std::vector<std::size_t> iforest_trees = {100, 200, 500};
    std::vector<std::size_t> knn_ks = {1, 2, 5, 10, 25};
    std::vector<KnnMetric> knn_metrics = {KnnMetric::cosine, KnnMetric::euclidean};
};

inline InnerGrid default_inner_grid() {
    InnerGrid g;
    for (int i = 0; i <= 300; ++i) g.kde_bandwidths.push_back(std::pow(10.0, -2.0 + 0.01 * i));
    return g;
}

struct ComponentCandidateResult {
    ComponentConfig config;
    double cv_fpr = 0.0;
    double mean_tpr = 0.0;
    std::map<int, double> tpr_by_type;
};

struct GridCellResult {
    FeatureConfig features;
    EnsembleConfig config;  // per-component winners for this cell
    double cv_fpr = 0.0;
    double mean_tpr = 0.0;
    std::map<int, double> tpr_by_type;
    std::vector<ComponentCandidateResult> component_winners;
};

struct GridSearchReport {
    std::vector<GridCellResult> cells;
    std::vector<std::size_t> pareto;  // indices into cells, fpr-ascending
    std::size_t selected = 0;
    bool target_feasible = true;
    double target_fpr = 0.02;
};

namespace detail {

inline std::vector<ComponentConfig> expand_candidates(const ComponentConfig& base,
                                                      const InnerGrid& grid) {
    std::vector<ComponentConfig> out;
    switch (base.learner) {
        case LearnerKind::kde:
            for (double h : grid.kde_bandwidths) {
                ComponentConfig c = base;
                c.kde_bandwidth = h;
                out.push_back(c);
            }
            break;
        case LearnerKind::ocsvm:
            for (double nu : grid.ocsvm_nus)
                for (double gamma : grid.ocsvm_gammas) {
                    ComponentConfig c = base;
                    c.ocsvm_nu = nu;
                    c.ocsvm_gamma = gamma;
                    out.push_back(c);
                }
            break;
        case LearnerKind::iforest:
            for (double cont : grid.iforest_contaminations)
                for (std::size_t trees : grid.iforest_trees) {
                    ComponentConfig c = base;
                    c.iforest_contamination = cont;
                    c.iforest_trees = trees;
                    out.push_back(c);
                }
            break;
        case LearnerKind::knn:
            for (std::size_t k : grid.knn_ks)
                for (KnnMetric m : grid.knn_metrics) {
                    ComponentConfig c = base;
                    c.knn_k = k;
                    c.knn_metric = m;
                    out.push_back(c);
                }
            break;
    }
    return out;
}

inline double mean_tpr(const std::map<int, double>& tpr) {
    if (tpr.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [t, v] : tpr) s += v;
    return s / static_cast<double>(tpr.size());
}

// CV metrics of a single-component ensemble, following the same per-fold
// retraining protocol as evaluate().
inline ComponentCandidateResult evaluate_candidate(const ComponentConfig& cand, double budget,
                                                   const std::vector<FeatureBundle>& normal,
                                                   const std::map<int, std::vector<FeatureBundle>>& exfil,
                                                   std::size_t folds, std::size_t calibration_folds,
                                                   std::uint64_t seed) {
    EnsembleConfig single;
    ComponentConfig c = cand;
    c.fpr_budget = budget;
    single.components.push_back(c);
    single.target_fpr = budget;
    single.calibration_folds = calibration_folds;

    ComponentCandidateResult res;
    res.config = c;

    const auto fold = fold_assignment(normal.size(), folds, derive_seed(seed, 0x6f1d));
    std::size_t n_fp = 0, n_test = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<FeatureBundle> train;
        for (std::size_t i = 0; i < normal.size(); ++i)
            if (fold[i] != f) train.push_back(normal[i]);
        const EnsembleModel fm = train_ensemble(train, single, derive_seed(seed, f + 1));
        for (std::size_t i = 0; i < normal.size(); ++i) {
            if (fold[i] != f) continue;
            ++n_test;
            if (decide(fm, normal[i]).anomaly) ++n_fp;
        }
    }
    res.cv_fpr = static_cast<double>(n_fp) / static_cast<double>(n_test);

    const EnsembleModel full = train_ensemble(normal, single, seed);
    for (const auto& [type, bundles] : exfil) {
        std::size_t caught = 0;
        for (const auto& fb : bundles)
            if (decide(full, fb).anomaly) ++caught;
        res.tpr_by_type[type] = static_cast<double>(caught) / static_cast<double>(bundles.size());
    }
    res.mean_tpr = mean_tpr(res.tpr_by_type);
    return res;
}

}  // namespace detail

inline std::vector<FeatureBundle> featurize_all(const std::vector<Communication>& comms,
                                                const FeatureConfig& cfg, double window_length_s) {
    const FrequencyGrid dft_grid = build_frequency_grid(window_length_s, cfg.dft_dim);
    const FrequencyGrid stft_grid = build_frequency_grid(cfg.stft_window_s, cfg.stft_dim);
    std::vector<FeatureBundle> out;
    out.reserve(comms.size());
    for (const auto& c : comms) out.push_back(featurize(c, dft_grid, stft_grid, cfg));
    return out;
}

// Nested search: an outer sweep over feature-space settings and, inside
// each cell, a per-component sweep over that learner's parameters, each
// candidate scored by k-fold CV FPR on normal data and TPR on every
// exfiltration corpus. Winners are re-composed into the cell's ensemble
// and the cell re-evaluated as a whole. Component selection maximizes mean
// TPR subject to the component budget (0.1-point tolerance); if no
// candidate fits the budget, the lowest-FPR candidate wins and the report
// carries the infeasibility flag.
inline GridSearchReport grid_search(const std::vector<Communication>& normal,
                                    const std::map<int, std::vector<Communication>>& exfil,
                                    const OuterGrid& outer, const InnerGrid& inner,
                                    std::size_t folds, std::uint64_t seed,
                                    const EnsembleConfig& base = default_ensemble_config()) {
    if (folds < 2) throw ConfigError("grid_search: folds must be >= 2");
    if (normal.empty()) throw ContractError("grid_search: empty normal corpus");
    if (outer.dft_dims.empty() || outer.stft_dims.empty() || outer.stft_window_hours.empty())
        throw ConfigError("grid_search: outer grid has an empty axis");
    const double window_length_s =
        static_cast<double>(normal.front().window_end - normal.front().window_start);
    const double tol = 0.001;  // 0.1 percentage points

    GridSearchReport report;
    report.target_fpr = base.target_fpr;
    const std::vector<double> budgets = allocate_fpr_budgets(base);

    std::uint64_t cell_idx = 0;
    for (std::size_t dft_dim : outer.dft_dims) {
        for (std::size_t stft_dim : outer.stft_dims) {
            for (double a_hours : outer.stft_window_hours) {
                FeatureConfig fc;
                fc.dft_dim = dft_dim;
                fc.stft_dim = stft_dim;
                fc.stft_window_s = a_hours * 3600.0;
                const std::uint64_t cseed = derive_seed(seed, cell_idx++);

                const std::vector<FeatureBundle> normal_fb = featurize_all(normal, fc, window_length_s);
                std::map<int, std::vector<FeatureBundle>> exfil_fb;
                for (const auto& [type, comms] : exfil)
                    exfil_fb.emplace(type, featurize_all(comms, fc, window_length_s));

                GridCellResult cell;
                cell.features = fc;
                cell.config = base;
                cell.config.components.clear();
                for (std::size_t ci = 0; ci < base.components.size(); ++ci) {
                    const auto candidates = detail::expand_candidates(base.components[ci], inner);
                    ComponentCandidateResult best;
                    bool have_best = false, best_feasible = false;
                    for (std::size_t k = 0; k < candidates.size(); ++k) {
                        const auto res = detail::evaluate_candidate(
                            candidates[k], budgets[ci], normal_fb, exfil_fb, folds,
                            base.calibration_folds, derive_seed(cseed, ci * 10007 + k));
                        const bool feasible = res.cv_fpr <= budgets[ci] + tol;
                        const bool better =
                            !have_best ||
                            (feasible && !best_feasible) ||
                            (feasible == best_feasible &&
                             (feasible ? res.mean_tpr > best.mean_tpr : res.cv_fpr < best.cv_fpr));
                        if (better) {
                            best = res;
                            have_best = true;
                            best_feasible = feasible;
                        }
                    }
                    cell.component_winners.push_back(best);
                    cell.config.components.push_back(best.config);
                }

                const EnsembleModel model = train_ensemble(normal_fb, cell.config, cseed);
                const EvalReport ev = evaluate(model, normal_fb, exfil_fb, folds);
                cell.cv_fpr = ev.fpr;
                cell.tpr_by_type = ev.tpr_by_type;
                cell.mean_tpr = detail::mean_tpr(ev.tpr_by_type);
                report.cells.push_back(std::move(cell));
            }
        }
    }

    // Pareto set: cells not dominated in (lower fpr, higher mean tpr).
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < report.cells.size() && !dominated; ++j) {
            if (j == i) continue;
            const bool no_worse = report.cells[j].cv_fpr <= report.cells[i].cv_fpr &&
                                  report.cells[j].mean_tpr >= report.cells[i].mean_tpr;
            const bool strictly_better = report.cells[j].cv_fpr < report.cells[i].cv_fpr ||
                                         report.cells[j].mean_tpr > report.cells[i].mean_tpr;
            dominated = no_worse && strictly_better;
        }
        if (!dominated) report.pareto.push_back(i);
    }
    std::sort(report.pareto.begin(), report.pareto.end(),
              [&](std::size_t a, std::size_t b) { return report.cells[a].cv_fpr < report.cells[b].cv_fpr; });

    // Selection: best mean TPR among cells meeting the target; otherwise
    // the closest FPR, flagged infeasible.
    std::size_t best = 0;
    bool feasible_found = false;
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const bool feasible = report.cells[i].cv_fpr <= base.target_fpr + tol;
        if (feasible && (!feasible_found || report.cells[i].mean_tpr > report.cells[best].mean_tpr)) {
            best = i;
            feasible_found = true;
        } else if (!feasible_found && report.cells[i].cv_fpr < report.cells[best].cv_fpr) {
            best = i;
        }
    }
    report.selected = best;
    report.target_feasible = feasible_found;
    return report;
}

}  // namespace exfil
