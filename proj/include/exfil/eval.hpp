#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "exfil/core.hpp"
#include "exfil/ensemble.hpp"
#include "exfil/flow.hpp"
#include "exfil/kde.hpp"
#include "exfil/spectral.hpp"

namespace exfil {

// Fraction of bins whose (descending) squared amplitudes first reach half
// the spectrum energy. Periodic communications concentrate energy in few
// harmonics, so they score low; a flat spectrum with even dim scores 0.5.
inline double periodicity_fraction(const NormalizedAmplitudes& spectrum) {
    if (spectrum.degenerate || spectrum.values.empty())
        throw ContractError("periodicity_fraction: degenerate spectrum");
    std::vector<double> energy(spectrum.values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
        energy[i] = spectrum.values[i] * spectrum.values[i];
        total += energy[i];
    }
    if (total == 0.0) throw ContractError("periodicity_fraction: zero-energy spectrum");
    std::sort(energy.begin(), energy.end(), std::greater<double>());
    double acc = 0.0;
    std::size_t count = 0;
    for (double e : energy) {
        acc += e;
        ++count;
        if (acc >= 0.5 * total) break;
    }
    return static_cast<double>(count) / static_cast<double>(energy.size());
}

// rho = 1 - n_a / n_max: the occupied fraction of the ceil(span/a) windows
// partitioning the span.
inline double coarse_density(const Communication& comm, double window_width_s,
                             std::int64_t span_start, std::int64_t span_end) {
    const double span = static_cast<double>(span_end - span_start);
    if (span < window_width_s) throw ConfigError("coarse_density: span shorter than the window");
    const std::size_t n_max = static_cast<std::size_t>(std::ceil(span / window_width_s));
    std::vector<bool> occupied(n_max, false);
    for (const auto& s : comm.samples) {
        if (s.t < span_start || s.t > span_end) continue;
        std::size_t w =
            static_cast<std::size_t>(static_cast<double>(s.t - span_start) / window_width_s);
        if (w >= n_max) w = n_max - 1;
        occupied[w] = true;
    }
    const std::size_t n_occupied =
        static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), true));
    return static_cast<double>(n_occupied) / static_cast<double>(n_max);
}

struct EvalReport {
    double fpr = 0.0;
    std::map<int, double> tpr_by_type;
    std::map<int, double> tpr_beyond_avgdft;
    std::map<int, std::vector<std::pair<double, double>>> roc;  // (fpr, tpr), cleaned monotone
    std::map<std::string, double> per_component_fpr;
    std::vector<double> fold_fpr;
    bool union_bound_ok = true;
    std::size_t folds = 0;
};

namespace detail {

inline constexpr const char* kAvgDftName = "avgDFT";

struct ComponentScoreTable {
    // scores[sample][component]
    std::vector<std::vector<double>> scores;
    std::vector<std::string> names;
};

inline ComponentScoreTable score_bundles(const EnsembleModel& model,
                                         const std::vector<FeatureBundle>& bundles) {
    ComponentScoreTable t;
    for (const auto& c : model.components) t.names.push_back(c.name);
    t.scores.reserve(bundles.size());
    for (const auto& fb : bundles) {
        std::vector<double> row;
        row.reserve(model.components.size());
        for (const auto& c : model.components)
            row.push_back(c.score(extract_representation(fb, c.config.representation)));
        t.scores.push_back(std::move(row));
    }
    return t;
}

}  // namespace detail

// Cross-validated FPR on the normal corpus (retraining per fold with the
// model's configuration), TPR per exfiltration type from the supplied
// full model, the beyond-avgDFT detection rates, and ROC curves traced by
// scaling every component budget with a common multiplier.
inline EvalReport evaluate(const EnsembleModel& model, const std::vector<FeatureBundle>& normal,
                           const std::map<int, std::vector<FeatureBundle>>& exfil_by_type,
                           std::size_t folds) {
    if (folds < 2) throw ConfigError("evaluate: folds must be >= 2");
    if (normal.empty()) throw ContractError("evaluate: empty normal corpus");

    EvalReport report;
    report.folds = folds;

    // --- CV on normal data ---
    const auto fold = detail::fold_assignment(normal.size(), folds, derive_seed(model.seed, 0xcf01d));
    std::vector<std::vector<double>> heldout_scores(normal.size());
    std::vector<double> comp_fp(model.components.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<FeatureBundle> train;
        train.reserve(normal.size());
        for (std::size_t i = 0; i < normal.size(); ++i)
            if (fold[i] != f) train.push_back(normal[i]);
        const EnsembleModel fm = train_ensemble(train, model.config, derive_seed(model.seed, f + 1));

        std::size_t n_test = 0, n_fp = 0;
        std::vector<std::size_t> comp_fp_fold(fm.components.size(), 0);
        for (std::size_t i = 0; i < normal.size(); ++i) {
            if (fold[i] != f) continue;
            ++n_test;
            bool any = false;
            std::vector<double> row(fm.components.size());
            for (std::size_t c = 0; c < fm.components.size(); ++c) {
                const auto& comp = fm.components[c];
                row[c] = comp.score(extract_representation(normal[i], comp.config.representation));
                const bool a = row[c] > comp.threshold;
                if (a) {
                    ++comp_fp_fold[c];
                    any = true;
                }
            }
            heldout_scores[i] = std::move(row);
            if (any) ++n_fp;
        }
        const double fold_fpr = static_cast<double>(n_fp) / static_cast<double>(n_test);
        report.fold_fpr.push_back(fold_fpr);
        double comp_sum = 0.0;
        for (std::size_t c = 0; c < fm.components.size(); ++c) {
            const double cf = static_cast<double>(comp_fp_fold[c]) / static_cast<double>(n_test);
            comp_fp[c] += cf;
            comp_sum += cf;
        }
        if (fold_fpr > comp_sum + 1e-12) report.union_bound_ok = false;
    }
    report.fpr = 0.0;
    for (double f : report.fold_fpr) report.fpr += f;
    report.fpr /= static_cast<double>(folds);
    for (std::size_t c = 0; c < model.components.size(); ++c)
        report.per_component_fpr[model.components[c].name] = comp_fp[c] / static_cast<double>(folds);

    // --- TPR per exfiltration type with the full model ---
    std::size_t avg_idx = model.components.size();
    for (std::size_t c = 0; c < model.components.size(); ++c)
        if (model.components[c].name == detail::kAvgDftName) avg_idx = c;

    std::map<int, detail::ComponentScoreTable> exfil_scores;
    for (const auto& [type, bundles] : exfil_by_type) {
        if (bundles.empty()) throw ContractError("evaluate: empty exfil corpus for a type");
        exfil_scores.emplace(type, detail::score_bundles(model, bundles));
        const auto& table = exfil_scores.at(type);

        std::size_t caught = 0, beyond_denom = 0, beyond_caught = 0;
        for (const auto& row : table.scores) {
            bool any = false, avg_caught = false, rest_caught = false;
            for (std::size_t c = 0; c < row.size(); ++c) {
                const bool a = row[c] > model.components[c].threshold;
                any = any || a;
                if (c == avg_idx)
                    avg_caught = a;
                else
                    rest_caught = rest_caught || a;
            }
            if (any) ++caught;
            if (avg_idx < model.components.size() && !avg_caught) {
                ++beyond_denom;
                if (rest_caught) ++beyond_caught;
            }
        }
        report.tpr_by_type[type] =
            static_cast<double>(caught) / static_cast<double>(table.scores.size());
        if (beyond_denom > 0)
            report.tpr_beyond_avgdft[type] =
                static_cast<double>(beyond_caught) / static_cast<double>(beyond_denom);
    }

    // --- ROC by a common budget multiplier across component calibration
    // curves ---
    std::vector<double> multipliers;
    for (double m = 0.05; m <= 25.0; m *= 1.35) multipliers.push_back(m);
    for (const auto& [type, table] : exfil_scores) {
        std::vector<std::pair<double, double>> curve;
        for (double mult : multipliers) {
            std::vector<double> thr(model.components.size());
            for (std::size_t c = 0; c < model.components.size(); ++c)
                thr[c] = model.components[c].threshold_for_budget(
                    std::min(model.components[c].fpr_budget * mult, 0.999));
            std::size_t fp = 0;
            for (const auto& row : heldout_scores) {
                bool any = false;
                for (std::size_t c = 0; c < row.size(); ++c) any = any || row[c] > thr[c];
                if (any) ++fp;
            }
            std::size_t denom = 0, caught = 0;
            for (const auto& row : table.scores) {
                const bool avg_caught =
                    avg_idx < row.size() && row[avg_idx] > thr[avg_idx];
                if (avg_caught) continue;
                ++denom;
                bool rest = false;
                for (std::size_t c = 0; c < row.size(); ++c)
                    if (c != avg_idx && row[c] > thr[c]) rest = true;
                if (rest) ++caught;
            }
            curve.emplace_back(static_cast<double>(fp) / static_cast<double>(normal.size()),
                               denom ? static_cast<double>(caught) / static_cast<double>(denom) : 0.0);
        }
        std::sort(curve.begin(), curve.end());
        double best = 0.0;
        for (auto& pt : curve) {
            best = std::max(best, pt.second);
            pt.second = best;  // monotone cleanup
        }
        report.roc[type] = std::move(curve);
    }
    return report;
}

// Fixed-model rates over a labeled corpus; no retraining.
struct FixedRates {
    double flagged_fraction = 0.0;
    std::size_t flagged = 0;
    std::size_t total = 0;
};

inline FixedRates apply_model(const EnsembleModel& model, const std::vector<FeatureBundle>& bundles) {
    FixedRates r;
    r.total = bundles.size();
    for (const auto& fb : bundles)
        if (decide(model, fb).anomaly) ++r.flagged;
    r.flagged_fraction = r.total ? static_cast<double>(r.flagged) / static_cast<double>(r.total) : 0.0;
    return r;
}

// The raw-average-bytes comparison: Gaussian KDE (h = 0.1) on
// (log mean egress bytes, log mean ingress bytes), threshold calibrated to
// the same target FPR from out-of-fold scores.
struct BaselineReport {
    double miss_rate = 0.0;   // exfil fraction the baseline calls normal
    double train_fpr = 0.0;   // out-of-fold FPR at the chosen threshold
    double threshold = 0.0;
    KdeModel model;
};

inline std::vector<double> raw_byte_features(const TrafficSummary& s) {
    return {std::log(std::max(s.mean_egress_bytes, kAvgDftEpsilonBytes)),
            std::log(std::max(s.mean_ingress_bytes, kAvgDftEpsilonBytes))};
}

inline BaselineReport baseline_raw_kde(const std::vector<TrafficSummary>& normal,
                                       const std::vector<TrafficSummary>& exfil,
                                       double target_fpr = 0.02, std::size_t folds = 5,
                                       std::uint64_t seed = 0) {
    if (normal.empty() || exfil.empty()) throw ContractError("baseline_raw_kde: empty corpus");
    const double bandwidth = 0.1;

    Matrix X;
    for (const auto& s : normal) X.push_row(raw_byte_features(s));

    const auto fold = detail::fold_assignment(X.rows, folds, derive_seed(seed, 0xbead));
    std::vector<double> oof(X.rows);
    for (std::size_t f = 0; f < folds; ++f) {
        Matrix train;
        for (std::size_t i = 0; i < X.rows; ++i)
            if (fold[i] != f) train.push_row(std::vector<double>(X.row(i), X.row(i) + X.cols));
        const KdeModel km = kde_fit(train, bandwidth);
        for (std::size_t i = 0; i < X.rows; ++i)
            if (fold[i] == f) oof[i] = kde_score(km, std::vector<double>(X.row(i), X.row(i) + X.cols));
    }

    BaselineReport rep;
    rep.model = kde_fit(X, bandwidth);
    rep.threshold = quantile(oof, target_fpr);  // anomaly iff log-density below
    rep.model.threshold = rep.threshold;

    std::size_t fp = 0;
    for (double s : oof)
        if (s < rep.threshold) ++fp;
    rep.train_fpr = static_cast<double>(fp) / static_cast<double>(X.rows);

    std::size_t missed = 0;
    for (const auto& s : exfil)
        if (kde_score(rep.model, raw_byte_features(s)) >= rep.threshold) ++missed;
    rep.miss_rate = static_cast<double>(missed) / static_cast<double>(exfil.size());
    return rep;
}

}  // namespace exfil
