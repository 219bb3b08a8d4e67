// exfilscope: flow-spectrum exfiltration detector CLI.
//
// Subcommands: featurize, train, detect, simulate, tune, evaluate, report.
// Exit codes: 0 success, 2 config error, 3 parse error, 4 contract
// violation, 5 non-convergence.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "exfil/ensemble.hpp"
#include "exfil/eval.hpp"
#include "exfil/flow.hpp"
#include "exfil/grid_search.hpp"
#include "exfil/io.hpp"
#include "exfil/simulate.hpp"
#include "exfil/spectral.hpp"

namespace {

using exfil::json;

constexpr std::int64_t kTwoWeeksS = 14 * 86400;

struct CommonOpts {
    std::uint64_t seed = 0;
    std::size_t jobs = 0;  // 0 = hardware concurrency
};

std::size_t effective_jobs(std::size_t jobs) {
    if (jobs > 0) return jobs;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

// Deterministic parallel map: results land at their input index, so the
// output is identical for any job count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    jobs = std::min(effective_jobs(jobs), std::max<std::size_t>(n, 1));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (std::size_t t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Output destinations and the worker count do not change what is computed,
// so they stay out of the provenance hash: runs that differ only in where
// results land (or in parallelism) produce identical bytes.
std::string config_fingerprint(const CLI::App* cmd) {
    static const std::set<std::string> excluded = {"--out",     "--labels", "--summaries",
                                                   "--out-dir", "--jobs",   "--config"};
    std::ostringstream os;
    for (const auto* opt : cmd->get_options()) {
        if (opt->count() == 0 && opt->get_default_str().empty()) continue;
        if (excluded.count(opt->get_name())) continue;
        os << opt->get_name() << "=";
        for (const auto& r : opt->results()) os << r << ";";
        if (opt->count() == 0) os << opt->get_default_str();
        os << "\n";
    }
    return os.str();
}

exfil::Direction direction_from_string(const std::string& s) {
    if (s == "egress") return exfil::Direction::egress;
    if (s == "ingress") return exfil::Direction::ingress;
    throw exfil::ConfigError("stft-direction must be 'egress' or 'ingress'");
}

// ---- featurize ----

struct FeaturizeOpts {
    std::string flows, out, summaries, host;
    std::int64_t window_start = 0, window_end = kTwoWeeksS;
    std::size_t dft_dim = 500, stft_dim = 40;
    double stft_window_hours = 8.0;
    std::string stft_direction = "egress";
    bool server_mode = false, lenient = false;
};

int cmd_featurize(const FeaturizeOpts& o, const CommonOpts& common, const std::string& cfg_text) {
    const auto result =
        exfil::parse_flow_file(o.flows, o.host, o.lenient ? exfil::ParseMode::lenient
                                                          : exfil::ParseMode::strict);
    if (result.malformed_rows > 0)
        std::cerr << "warning: skipped " << result.malformed_rows << " malformed rows\n";
    if (result.empty_warning) {
        std::cerr << "warning: no flow rows involve host " << o.host << "; emitting zero bundles\n";
        exfil::write_bundles(o.out, {}, common.seed, cfg_text);
        return 0;
    }

    const auto comms = exfil::assemble_communications(result.records, o.host, o.window_start,
                                                      o.window_end, o.server_mode);
    exfil::FeatureConfig fc;
    fc.dft_dim = o.dft_dim;
    fc.stft_dim = o.stft_dim;
    fc.stft_window_s = o.stft_window_hours * 3600.0;
    fc.stft_direction = direction_from_string(o.stft_direction);
    const double window_length_s = static_cast<double>(o.window_end - o.window_start);
    const exfil::FrequencyGrid dft_grid = exfil::build_frequency_grid(window_length_s, fc.dft_dim);
    const exfil::FrequencyGrid stft_grid = exfil::build_frequency_grid(fc.stft_window_s, fc.stft_dim);

    const auto t_start = std::chrono::steady_clock::now();
    std::vector<exfil::FeatureBundle> bundles(comms.size());
    parallel_for(comms.size(), common.jobs,
                 [&](std::size_t i) { bundles[i] = exfil::featurize(comms[i], dft_grid, stft_grid, fc); });
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    exfil::write_bundles(o.out, bundles, common.seed, cfg_text);
    if (!o.summaries.empty()) {
        std::ofstream sout(o.summaries);
        if (!sout) throw exfil::ConfigError("cannot write summaries file: " + o.summaries);
        sout << exfil::provenance_header("summaries", common.seed, cfg_text).dump() << "\n";
        for (const auto& fb : bundles) {
            json j{{"key", exfil::to_json(fb.key)}, {"summary", exfil::to_json(fb.summary)}};
            sout << j.dump() << "\n";
        }
    }
    const double per100 = comms.empty() ? 0.0 : elapsed * 100.0 / static_cast<double>(comms.size());
    std::cout << "featurized " << comms.size() << " communications in " << elapsed << " s ("
              << per100 << " s per 100)\n";
    return 0;
}

// ---- train ----

struct TrainOpts {
    std::string features, out;
    double target_fpr = 0.02;
    bool include_dft_i = false;
    std::size_t calibration_folds = 5;
    double kde_bandwidth = 0.0, ocsvm_nu = 0.0, ocsvm_gamma = 0.0, iforest_contamination = 0.0;
    std::size_t iforest_trees = 0;
};

int cmd_train(const TrainOpts& o, const CommonOpts& common) {
    const auto bundles = exfil::read_bundles(o.features);
    exfil::EnsembleConfig cfg = exfil::default_ensemble_config(o.include_dft_i);
    cfg.target_fpr = o.target_fpr;
    cfg.calibration_folds = o.calibration_folds;
    for (auto& c : cfg.components) {
        if (o.kde_bandwidth > 0.0 && c.learner == exfil::LearnerKind::kde)
            c.kde_bandwidth = o.kde_bandwidth;
        if (o.ocsvm_nu > 0.0 && c.learner == exfil::LearnerKind::ocsvm) c.ocsvm_nu = o.ocsvm_nu;
        if (o.ocsvm_gamma > 0.0 && c.learner == exfil::LearnerKind::ocsvm)
            c.ocsvm_gamma = o.ocsvm_gamma;
        if (o.iforest_contamination > 0.0 && c.learner == exfil::LearnerKind::iforest)
            c.iforest_contamination = o.iforest_contamination;
        if (o.iforest_trees > 0 && c.learner == exfil::LearnerKind::iforest)
            c.iforest_trees = o.iforest_trees;
    }
    const exfil::EnsembleModel model = exfil::train_ensemble(bundles, cfg, common.seed);
    for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
    exfil::save_ensemble(o.out, model);
    std::cout << "trained " << model.components.size() << " components on " << bundles.size()
              << " communications; model written to " << o.out << "\n";
    return 0;
}

// ---- detect ----

struct DetectOpts {
    std::string model, features, out;
};

int cmd_detect(const DetectOpts& o, const CommonOpts& common, const std::string& cfg_text) {
    const exfil::EnsembleModel model = exfil::load_ensemble(o.model);
    const auto bundles = exfil::read_bundles(o.features);
    // Validate dimensions up front so a grid mismatch is a clean config
    // error before any scoring happens.
    if (!bundles.empty()) {
        if (bundles.front().dft_e.size() != model.dft_dim)
            throw exfil::ConfigError("feature dft dim " + std::to_string(bundles.front().dft_e.size()) +
                                     " does not match model dft dim " + std::to_string(model.dft_dim));
        if (bundles.front().stft.size() != model.stft_flat_dim)
            throw exfil::ConfigError("feature stft dim " + std::to_string(bundles.front().stft.size()) +
                                     " does not match model stft dim " +
                                     std::to_string(model.stft_flat_dim));
    }
    std::vector<exfil::EnsembleVerdict> verdicts;
    verdicts.reserve(bundles.size());
    std::size_t flagged = 0;
    for (const auto& fb : bundles) {
        verdicts.push_back(exfil::decide(model, fb));
        if (verdicts.back().anomaly) ++flagged;
    }
    exfil::write_verdicts(o.out, verdicts, common.seed, cfg_text);
    std::cout << "flagged " << flagged << " of " << bundles.size() << " communications\n";
    return 0;
}

// ---- simulate ----

struct SimulateOpts {
    std::string out, labels, host = "10.0.0.5", profile;
    int exfil_type = 0;
    std::size_t n = 100;
    std::int64_t window_start = 0, window_end = kTwoWeeksS;
};

int cmd_simulate(const SimulateOpts& o, const CommonOpts& common, const std::string& cfg_text) {
    if (o.profile.empty() == (o.exfil_type == 0))
        throw exfil::ConfigError("simulate: give exactly one of --profile or --exfil-type");

    std::vector<exfil::Communication> comms;
    std::vector<exfil::LabelRecord> labels;
    if (o.exfil_type != 0) {
        const double window_len = static_cast<double>(o.window_end - o.window_start);
        for (std::size_t i = 0; i < o.n; ++i) {
            const auto sc = exfil::sample_scenario(o.exfil_type, exfil::derive_seed(common.seed, i),
                                                  window_len);
            // Exfil endpoints use the upper half of the synthetic range so
            // they never collide with normal-corpus remotes.
            exfil::CommunicationKey key{o.host, exfil::synthetic_remote_ip(0x10000 + i), 443};
            comms.push_back(exfil::generate_exfil(sc, o.window_start, o.window_end, key));
            labels.push_back({key, "exfil-type-" + std::to_string(o.exfil_type), sc});
        }
    } else {
        const auto profile = exfil::normal_profile_from_string(o.profile);
        comms = exfil::generate_normal_corpus(profile, o.n, o.window_start, o.window_end, common.seed,
                                              o.host);
        for (const auto& c : comms) labels.push_back({c.key, "normal", std::nullopt});
    }
    exfil::write_flows_csv(o.out, comms, common.seed, cfg_text);
    if (!o.labels.empty()) exfil::write_labels(o.labels, labels, common.seed, cfg_text);
    std::size_t n_conn = 0;
    for (const auto& c : comms) n_conn += c.samples.size();
    std::cout << "simulated " << comms.size() << " communications (" << n_conn
              << " connections) to " << o.out << "\n";
    return 0;
}

// ---- evaluate ----

struct EvaluateOpts {
    std::string model, normal, out;
    std::vector<std::string> exfil;  // type=path
    std::size_t folds = 10;
    bool no_baseline = false;
};

std::map<int, std::vector<exfil::FeatureBundle>> read_exfil_sets(const std::vector<std::string>& specs) {
    std::map<int, std::vector<exfil::FeatureBundle>> out;
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw exfil::ConfigError("--exfil expects TYPE=FEATURES_PATH, got '" + s + "'");
        const int type = std::stoi(s.substr(0, eq));
        out[type] = exfil::read_bundles(s.substr(eq + 1));
    }
    return out;
}

int cmd_evaluate(const EvaluateOpts& o, const CommonOpts&) {
    const exfil::EnsembleModel model = exfil::load_ensemble(o.model);
    const auto normal = exfil::read_bundles(o.normal);
    const auto exfil_sets = read_exfil_sets(o.exfil);
    const exfil::EvalReport report = exfil::evaluate(model, normal, exfil_sets, o.folds);

    json j = exfil::to_json(report);
    if (!o.no_baseline && !exfil_sets.empty()) {
        std::vector<exfil::TrafficSummary> normal_sum;
        for (const auto& fb : normal) normal_sum.push_back(fb.summary);
        json baselines = json::object();
        for (const auto& [type, bundles] : exfil_sets) {
            std::vector<exfil::TrafficSummary> exfil_sum;
            for (const auto& fb : bundles) exfil_sum.push_back(fb.summary);
            const auto b = exfil::baseline_raw_kde(normal_sum, exfil_sum, model.config.target_fpr,
                                                   5, model.seed);
            const double ens_miss = 1.0 - report.tpr_by_type.at(type);
            baselines[std::to_string(type)] = {{"baseline_miss_rate", b.miss_rate},
                                               {"baseline_train_fpr", b.train_fpr},
                                               {"ensemble_miss_rate", ens_miss}};
        }
        j["baseline_raw_kde"] = std::move(baselines);
    }
    std::ofstream out(o.out);
    if (!out) throw exfil::ConfigError("cannot write report file: " + o.out);
    out << j.dump(2) << "\n";

    std::cout << "cv fpr: " << report.fpr << " over " << report.folds << " folds\n";
    for (const auto& [type, tpr] : report.tpr_by_type) {
        std::cout << "type " << type << ": tpr " << tpr;
        if (report.tpr_beyond_avgdft.count(type))
            std::cout << ", beyond-avgDFT " << report.tpr_beyond_avgdft.at(type);
        std::cout << "\n";
    }
    std::cout << "union bound " << (report.union_bound_ok ? "holds" : "VIOLATED")
              << "; report written to " << o.out << "\n";
    return 0;
}

// ---- tune ----

struct TuneOpts {
    std::string normal_flows, host, out;
    std::vector<std::string> exfil_flows;  // type=path
    std::int64_t window_start = 0, window_end = kTwoWeeksS;
    bool server_mode = false;
    std::size_t folds = 10;
    double target_fpr = 0.02;
    bool include_dft_i = false;
    std::vector<std::size_t> dft_dims = {250, 500, 1000, 2000};
    std::vector<std::size_t> stft_dims = {20, 40, 80, 160};
    std::vector<double> stft_windows = {2, 4, 8, 16};
    std::vector<double> kde_bandwidths;
    std::vector<double> ocsvm_nus, ocsvm_gammas, iforest_contaminations;
    std::vector<std::size_t> iforest_trees;
    std::vector<std::size_t> knn_ks;
};

json component_config_brief(const exfil::ComponentConfig& c) {
    return exfil::to_json(c);
}

int cmd_tune(const TuneOpts& o, const CommonOpts& common) {
    const auto normal_parsed = exfil::parse_flow_file(o.normal_flows, o.host);
    const auto normal = exfil::assemble_communications(normal_parsed.records, o.host, o.window_start,
                                                       o.window_end, o.server_mode);
    std::map<int, std::vector<exfil::Communication>> exfil_comms;
    for (const auto& s : o.exfil_flows) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw exfil::ConfigError("--exfil-flows expects TYPE=FLOWS_PATH, got '" + s + "'");
        const int type = std::stoi(s.substr(0, eq));
        const auto parsed = exfil::parse_flow_file(s.substr(eq + 1), o.host);
        exfil_comms[type] = exfil::assemble_communications(parsed.records, o.host, o.window_start,
                                                           o.window_end, o.server_mode);
    }

    exfil::OuterGrid outer;
    outer.dft_dims = o.dft_dims;
    outer.stft_dims = o.stft_dims;
    outer.stft_window_hours = o.stft_windows;
    exfil::InnerGrid inner = exfil::default_inner_grid();
    if (!o.kde_bandwidths.empty()) inner.kde_bandwidths = o.kde_bandwidths;
    if (!o.ocsvm_nus.empty()) inner.ocsvm_nus = o.ocsvm_nus;
    if (!o.ocsvm_gammas.empty()) inner.ocsvm_gammas = o.ocsvm_gammas;
    if (!o.iforest_contaminations.empty()) inner.iforest_contaminations = o.iforest_contaminations;
    if (!o.iforest_trees.empty()) inner.iforest_trees = o.iforest_trees;
    if (!o.knn_ks.empty()) inner.knn_ks = o.knn_ks;

    exfil::EnsembleConfig base = exfil::default_ensemble_config(o.include_dft_i);
    base.target_fpr = o.target_fpr;
    const auto report = exfil::grid_search(normal, exfil_comms, outer, inner, o.folds, common.seed,
                                           base);

    json cells = json::array();
    for (const auto& cell : report.cells) {
        json comps = json::array();
        for (const auto& c : cell.config.components) comps.push_back(component_config_brief(c));
        json tpr = json::object();
        for (const auto& [t, v] : cell.tpr_by_type) tpr[std::to_string(t)] = v;
        cells.push_back({{"dft_dim", cell.features.dft_dim},
                         {"stft_dim", cell.features.stft_dim},
                         {"stft_window_hours", cell.features.stft_window_s / 3600.0},
                         {"components", std::move(comps)},
                         {"cv_fpr", cell.cv_fpr},
                         {"mean_tpr", cell.mean_tpr},
                         {"tpr_by_type", std::move(tpr)}});
    }
    json j{{"cells", std::move(cells)},
           {"pareto", report.pareto},
           {"selected", report.selected},
           {"target_feasible", report.target_feasible},
           {"target_fpr", report.target_fpr}};
    std::ofstream out(o.out);
    if (!out) throw exfil::ConfigError("cannot write tune report: " + o.out);
    out << j.dump(2) << "\n";

    const auto& sel = report.cells[report.selected];
    std::cout << "searched " << report.cells.size() << " outer cells; selected dft_dim="
              << sel.features.dft_dim << " stft_dim=" << sel.features.stft_dim
              << " a=" << sel.features.stft_window_s / 3600.0 << "h (cv fpr " << sel.cv_fpr
              << ", mean tpr " << sel.mean_tpr << ")";
    if (!report.target_feasible) std::cout << " [target FPR not attainable; best effort]";
    std::cout << "\n";
    return 0;
}

// ---- report ----

struct ReportOpts {
    std::string eval, out_dir;
};

int cmd_report(const ReportOpts& o) {
    std::ifstream in(o.eval);
    if (!in) throw exfil::ParseError("cannot open evaluation report: " + o.eval);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw exfil::ParseError("evaluation report is not valid JSON: " + o.eval);

    std::filesystem::create_directories(o.out_dir);
    const auto txt_path = std::filesystem::path(o.out_dir) / "report.txt";
    std::ofstream txt(txt_path);
    if (!txt) throw exfil::ConfigError("cannot write " + txt_path.string());

    txt << "detection evaluation\n====================\n\n";
    txt << "cross-validated FPR: " << j.value("fpr", 0.0) << " (" << j.value("folds", 0)
        << " folds)\n";
    txt << "union bound: " << (j.value("union_bound_ok", true) ? "holds" : "VIOLATED") << "\n\n";
    if (j.contains("per_component_fpr")) {
        txt << "per-component FPR:\n";
        for (const auto& [name, v] : j.at("per_component_fpr").items())
            txt << "  " << name << ": " << v.get<double>() << "\n";
        txt << "\n";
    }
    if (j.contains("tpr_by_type")) {
        txt << "TPR by exfiltration type:\n";
        for (const auto& [type, v] : j.at("tpr_by_type").items()) {
            txt << "  type " << type << ": " << v.get<double>();
            if (j.contains("tpr_beyond_avgdft") && j.at("tpr_beyond_avgdft").contains(type))
                txt << " (beyond avgDFT: " << j.at("tpr_beyond_avgdft").at(type).get<double>() << ")";
            txt << "\n";
        }
        txt << "\n";
    }
    if (j.contains("baseline_raw_kde")) {
        txt << "raw-byte KDE baseline comparison (miss rates):\n";
        for (const auto& [type, v] : j.at("baseline_raw_kde").items())
            txt << "  type " << type << ": baseline " << v.at("baseline_miss_rate").get<double>()
                << " vs ensemble " << v.at("ensemble_miss_rate").get<double>() << "\n";
        txt << "\n";
    }
    if (j.contains("roc")) {
        for (const auto& [type, pts] : j.at("roc").items()) {
            const auto roc_path =
                std::filesystem::path(o.out_dir) / ("roc_type_" + std::string(type) + ".csv");
            std::ofstream roc(roc_path);
            roc << "fpr,tpr\n";
            for (const auto& p : pts) roc << p.at(0).get<double>() << "," << p.at(1).get<double>() << "\n";
        }
        txt << "ROC point files written alongside this report.\n";
    }
    std::cout << "report rendered to " << txt_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-spectrum data-exfiltration detector"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags override file values");
    app.get_config_formatter_base()->valueSeparator('=');

    CommonOpts common;
    app.add_option("--seed", common.seed, "master RNG seed")->capture_default_str();
    app.add_option("--jobs", common.jobs, "worker threads (0 = all cores); output is identical for any value")
        ->capture_default_str();

    FeaturizeOpts fo;
    auto* feat = app.add_subcommand("featurize", "parse flows and emit per-communication feature bundles");
    feat->add_option("--flows", fo.flows, "input flow CSV")->required();
    feat->add_option("--host", fo.host, "monitored host address")->required();
    feat->add_option("--out", fo.out, "output features JSONL")->required();
    feat->add_option("--summaries", fo.summaries, "optional traffic-summary sidecar JSONL");
    feat->add_option("--window-start", fo.window_start, "analysis window start (s)")->capture_default_str();
    feat->add_option("--window-end", fo.window_end, "analysis window end (s)")->capture_default_str();
    feat->add_option("--dft-dim", fo.dft_dim, "full-window frequency bins")->capture_default_str();
    feat->add_option("--stft-dim", fo.stft_dim, "per-slice frequency bins")->capture_default_str();
    feat->add_option("--stft-window-hours", fo.stft_window_hours, "STFT window width a (hours)")
        ->capture_default_str();
    feat->add_option("--stft-direction", fo.stft_direction, "egress|ingress")->capture_default_str();
    feat->add_flag("--server-mode", fo.server_mode, "orient triplets with the host as destination");
    feat->add_flag("--lenient", fo.lenient, "skip malformed rows instead of failing");

    TrainOpts to;
    auto* train = app.add_subcommand("train", "fit the one-class ensemble on normal features");
    train->add_option("--features", to.features, "training features JSONL")->required();
    train->add_option("--out", to.out, "output model file")->required();
    train->add_option("--target-fpr", to.target_fpr, "ensemble false-positive budget")
        ->capture_default_str();
    train->add_flag("--include-dft-i", to.include_dft_i, "add the ingress-spectrum component");
    train->add_option("--calibration-folds", to.calibration_folds, "threshold calibration folds")
        ->capture_default_str();
    train->add_option("--kde-bandwidth", to.kde_bandwidth, "override KDE bandwidth");
    train->add_option("--ocsvm-nu", to.ocsvm_nu, "override nu (default: derived from budget)");
    train->add_option("--ocsvm-gamma", to.ocsvm_gamma, "override gamma (default: 1/dim)");
    train->add_option("--iforest-trees", to.iforest_trees, "override forest size");
    train->add_option("--iforest-contamination", to.iforest_contamination,
                      "override contamination (default: component budget)");

    DetectOpts dopts;
    auto* detect = app.add_subcommand("detect", "score features against a trained model");
    detect->add_option("--model", dopts.model, "model file")->required();
    detect->add_option("--features", dopts.features, "features JSONL")->required();
    detect->add_option("--out", dopts.out, "output verdicts JSONL")->required();

    SimulateOpts so;
    auto* sim = app.add_subcommand("simulate", "generate labeled synthetic flow data");
    sim->add_option("--out", so.out, "output flow CSV")->required();
    sim->add_option("--labels", so.labels, "output labels JSONL");
    sim->add_option("--profile", so.profile, "normal profile: client|gateway|server");
    sim->add_option("--exfil-type", so.exfil_type, "exfiltration family 1-4")
        ->check(CLI::Range(1, 4));
    sim->add_option("--n", so.n, "communications to generate")->capture_default_str();
    sim->add_option("--host", so.host, "monitored host address")->capture_default_str();
    sim->add_option("--window-start", so.window_start, "analysis window start (s)")->capture_default_str();
    sim->add_option("--window-end", so.window_end, "analysis window end (s)")->capture_default_str();

    EvaluateOpts eo;
    auto* eval = app.add_subcommand("evaluate", "cross-validated FPR/TPR/ROC report");
    eval->add_option("--model", eo.model, "model file")->required();
    eval->add_option("--normal", eo.normal, "normal features JSONL")->required();
    eval->add_option("--exfil", eo.exfil, "TYPE=FEATURES_PATH, repeatable");
    eval->add_option("--folds", eo.folds, "CV folds")->capture_default_str();
    eval->add_option("--out", eo.out, "output report JSON")->required();
    eval->add_flag("--no-baseline", eo.no_baseline, "skip the raw-byte KDE baseline comparison");

    TuneOpts tu;
    auto* tune = app.add_subcommand("tune", "nested grid search over feature and model parameters");
    tune->add_option("--normal-flows", tu.normal_flows, "normal flow CSV")->required();
    tune->add_option("--host", tu.host, "monitored host address")->required();
    tune->add_option("--exfil-flows", tu.exfil_flows, "TYPE=FLOWS_PATH, repeatable");
    tune->add_option("--out", tu.out, "output report JSON")->required();
    tune->add_option("--window-start", tu.window_start, "analysis window start (s)")->capture_default_str();
    tune->add_option("--window-end", tu.window_end, "analysis window end (s)")->capture_default_str();
    tune->add_flag("--server-mode", tu.server_mode, "orient triplets with the host as destination");
    tune->add_option("--folds", tu.folds, "CV folds")->capture_default_str();
    tune->add_option("--target-fpr", tu.target_fpr, "ensemble budget")->capture_default_str();
    tune->add_flag("--include-dft-i", tu.include_dft_i, "add the ingress-spectrum component");
    tune->add_option("--dft-dims", tu.dft_dims, "outer grid: DFT dims")->delimiter(',');
    tune->add_option("--stft-dims", tu.stft_dims, "outer grid: STFT dims")->delimiter(',');
    tune->add_option("--stft-windows", tu.stft_windows, "outer grid: a in hours")->delimiter(',');
    tune->add_option("--kde-bandwidths", tu.kde_bandwidths, "inner grid: KDE h values")->delimiter(',');
    tune->add_option("--ocsvm-nus", tu.ocsvm_nus, "inner grid: nu values")->delimiter(',');
    tune->add_option("--ocsvm-gammas", tu.ocsvm_gammas, "inner grid: gamma values")->delimiter(',');
    tune->add_option("--iforest-contaminations", tu.iforest_contaminations,
                     "inner grid: contamination values")
        ->delimiter(',');
    tune->add_option("--iforest-trees", tu.iforest_trees, "inner grid: forest sizes")->delimiter(',');
    tune->add_option("--knn-ks", tu.knn_ks, "inner grid: k values")->delimiter(',');

    ReportOpts ro;
    auto* rep = app.add_subcommand("report", "render an evaluation report to text + plot files");
    rep->add_option("--eval", ro.eval, "evaluation report JSON")->required();
    rep->add_option("--out-dir", ro.out_dir, "output directory")->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage/config problems map to the config exit code
    }

    try {
        if (feat->parsed()) return cmd_featurize(fo, common, config_fingerprint(feat));
        if (train->parsed()) return cmd_train(to, common);
        if (detect->parsed()) return cmd_detect(dopts, common, config_fingerprint(detect));
        if (sim->parsed()) return cmd_simulate(so, common, config_fingerprint(sim));
        if (eval->parsed()) return cmd_evaluate(eo, common);
        if (tune->parsed()) return cmd_tune(tu, common);
        if (rep->parsed()) return cmd_report(ro);
    } catch (const exfil::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
