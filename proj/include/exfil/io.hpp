#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exfil/ensemble.hpp"
#include "exfil/eval.hpp"
#include "exfil/flow.hpp"
#include "exfil/simulate.hpp"
#include "exfil/spectral.hpp"

namespace exfil {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kFeatureFormatVersion = 1;

using json = nlohmann::json;

inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// Provenance header written as the first line of JSONL outputs and as '#'
// comments ahead of CSV outputs.
inline json provenance_header(const std::string& kind, std::uint64_t seed,
                              const std::string& config_text) {
    return json{{"_header",
                 {{"tool", "exfilscope"},
                  {"version", kToolVersion},
                  {"kind", kind},
                  {"seed", seed},
                  {"config_hash", fnv1a_hex(config_text)}}}};
}

// ---- key / summary ----

inline json to_json(const CommunicationKey& k) {
    return {{"src_ip", k.src_ip}, {"dst_ip", k.dst_ip}, {"dst_port", k.dst_port}};
}

inline CommunicationKey key_from_json(const json& j) {
    return {j.at("src_ip").get<std::string>(), j.at("dst_ip").get<std::string>(),
            j.at("dst_port").get<int>()};
}

inline json to_json(const TrafficSummary& s) {
    json j{{"n_connections", s.n_connections},
           {"duration_s", s.duration_s},
           {"mean_egress_bytes", s.mean_egress_bytes},
           {"mean_ingress_bytes", s.mean_ingress_bytes},
           {"avg_sampling_rate_hz", s.avg_sampling_rate_hz}};
    if (s.density) j["density"] = *s.density;
    if (s.periodicity_fraction) j["periodicity_fraction"] = *s.periodicity_fraction;
    return j;
}

inline TrafficSummary summary_from_json(const json& j) {
    TrafficSummary s;
    s.n_connections = j.at("n_connections").get<std::size_t>();
    s.duration_s = j.at("duration_s").get<double>();
    s.mean_egress_bytes = j.at("mean_egress_bytes").get<double>();
    s.mean_ingress_bytes = j.at("mean_ingress_bytes").get<double>();
    s.avg_sampling_rate_hz = j.at("avg_sampling_rate_hz").get<double>();
    if (j.contains("density")) s.density = j.at("density").get<double>();
    if (j.contains("periodicity_fraction"))
        s.periodicity_fraction = j.at("periodicity_fraction").get<double>();
    return s;
}

// ---- feature bundles (JSONL; field names documented in docs/schemas.md) ----

inline json to_json(const FeatureBundle& fb) {
    return {{"key", to_json(fb.key)},
            {"avg_dft", {fb.avg_dft_ingress, fb.avg_dft_egress}},
            {"dft_e", fb.dft_e},
            {"dft_i", fb.dft_i},
            {"stft", fb.stft},
            {"summary", to_json(fb.summary)}};
}

inline FeatureBundle bundle_from_json(const json& j) {
    FeatureBundle fb;
    fb.key = key_from_json(j.at("key"));
    fb.avg_dft_ingress = j.at("avg_dft").at(0).get<double>();
    fb.avg_dft_egress = j.at("avg_dft").at(1).get<double>();
    fb.dft_e = j.at("dft_e").get<std::vector<double>>();
    fb.dft_i = j.at("dft_i").get<std::vector<double>>();
    fb.stft = j.at("stft").get<std::vector<double>>();
    fb.summary = summary_from_json(j.at("summary"));
    return fb;
}

inline void write_bundles(const std::string& path, const std::vector<FeatureBundle>& bundles,
                          std::uint64_t seed, const std::string& config_text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write features file: " + path);
    json hdr = provenance_header("features", seed, config_text);
    hdr["_header"]["format_version"] = kFeatureFormatVersion;
    out << hdr.dump() << "\n";
    for (const auto& fb : bundles) out << to_json(fb).dump() << "\n";
}

inline std::vector<FeatureBundle> read_bundles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open features file: " + path);
    std::vector<FeatureBundle> bundles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON record");
        if (j.contains("_header")) continue;
        bundles.push_back(bundle_from_json(j));
    }
    return bundles;
}

// ---- flows CSV + labels sidecar ----

inline void write_flows_csv(const std::string& path, const std::vector<Communication>& comms,
                            std::uint64_t seed, const std::string& config_text,
                            const std::string& protocol = "tcp") {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write flows file: " + path);
    out << "# exfilscope " << kToolVersion << " flows seed=" << seed
        << " config_hash=" << fnv1a_hex(config_text) << "\n";
    out << "timestamp,src_ip,dst_ip,dst_port,protocol,bytes\n";
    for (const auto& comm : comms) {
        for (const auto& s : comm.samples) {
            if (s.egress_bytes > 0)
                out << s.t << "," << comm.key.src_ip << "," << comm.key.dst_ip << ","
                    << comm.key.dst_port << "," << protocol << "," << s.egress_bytes << "\n";
            if (s.ingress_bytes > 0)
                out << s.t << "," << comm.key.dst_ip << "," << comm.key.src_ip << ","
                    << comm.key.dst_port << "," << protocol << "," << s.ingress_bytes << "\n";
        }
    }
}

inline json to_json(const ExfilScenario& sc) {
    json j{{"exfil_type", sc.exfil_type},
           {"period_s", sc.period_s},
           {"mean_egress_bytes", sc.mean_egress_bytes},
           {"mean_ingress_bytes", sc.mean_ingress_bytes},
           {"byte_std", sc.byte_std},
           {"duration_s", sc.duration_s},
           {"seed", sc.seed}};
    if (sc.jitter) j["jitter"] = *sc.jitter;
    if (sc.egress_max_bytes) j["egress_max_bytes"] = *sc.egress_max_bytes;
    if (sc.egress_min_bytes) j["egress_min_bytes"] = *sc.egress_min_bytes;
    return j;
}

struct LabelRecord {
    CommunicationKey key;
    std::string label;  // "normal" or "exfil-type-k"
    std::optional<ExfilScenario> scenario;
};

inline void write_labels(const std::string& path, const std::vector<LabelRecord>& labels,
                         std::uint64_t seed, const std::string& config_text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write labels file: " + path);
    out << provenance_header("labels", seed, config_text).dump() << "\n";
    for (const auto& l : labels) {
        json j{{"key", to_json(l.key)}, {"label", l.label}};
        if (l.scenario) j["scenario"] = to_json(*l.scenario);
        out << j.dump() << "\n";
    }
}

inline std::map<std::string, std::string> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open labels file: " + path);
    std::map<std::string, std::string> labels;  // key.str() -> label
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || j.contains("_header")) continue;
        labels[key_from_json(j.at("key")).str()] = j.at("label").get<std::string>();
    }
    return labels;
}

// ---- model persistence ----

inline json to_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const json& j) {
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw ParseError("model file: matrix shape mismatch");
    return m;
}

inline json to_json(const ComponentConfig& c) {
    return {{"representation", representation_name(c.representation)},
            {"learner", learner_name(c.learner)},
            {"preprocessing", static_cast<int>(c.preprocessing)},
            {"fpr_budget", c.fpr_budget},
            {"kde_bandwidth", c.kde_bandwidth},
            {"ocsvm_nu", c.ocsvm_nu},
            {"ocsvm_gamma", c.ocsvm_gamma},
            {"iforest_trees", c.iforest_trees},
            {"iforest_subsample", c.iforest_subsample},
            {"iforest_contamination", c.iforest_contamination},
            {"knn_k", c.knn_k},
            {"knn_metric", c.knn_metric == KnnMetric::euclidean ? "euclidean" : "cosine"}};
}

inline Representation representation_from_string(const std::string& s) {
    if (s == "avgDFT") return Representation::avg_dft;
    if (s == "DFT_E") return Representation::dft_e;
    if (s == "DFT_I") return Representation::dft_i;
    if (s == "STFT") return Representation::stft;
    throw ParseError("unknown representation: " + s);
}

inline LearnerKind learner_from_string(const std::string& s) {
    if (s == "kde") return LearnerKind::kde;
    if (s == "ocsvm") return LearnerKind::ocsvm;
    if (s == "iforest") return LearnerKind::iforest;
    if (s == "knn") return LearnerKind::knn;
    throw ParseError("unknown learner: " + s);
}

inline ComponentConfig component_config_from_json(const json& j) {
    ComponentConfig c;
    c.representation = representation_from_string(j.at("representation").get<std::string>());
    c.learner = learner_from_string(j.at("learner").get<std::string>());
    c.preprocessing = static_cast<Preprocessing>(j.at("preprocessing").get<int>());
    c.fpr_budget = j.at("fpr_budget").get<double>();
    c.kde_bandwidth = j.at("kde_bandwidth").get<double>();
    c.ocsvm_nu = j.at("ocsvm_nu").get<double>();
    c.ocsvm_gamma = j.at("ocsvm_gamma").get<double>();
    c.iforest_trees = j.at("iforest_trees").get<std::size_t>();
    c.iforest_subsample = j.at("iforest_subsample").get<std::size_t>();
    c.iforest_contamination = j.at("iforest_contamination").get<double>();
    c.knn_k = j.at("knn_k").get<std::size_t>();
    c.knn_metric = j.at("knn_metric").get<std::string>() == "cosine" ? KnnMetric::cosine
                                                                     : KnnMetric::euclidean;
    return c;
}

inline json to_json(const Standardizer& s) {
    return {{"use_log1p", s.use_log1p}, {"identity", s.identity}, {"mean", s.mean},
            {"inv_std", s.inv_std}};
}

inline Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    s.use_log1p = j.at("use_log1p").get<bool>();
    s.identity = j.at("identity").get<bool>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.inv_std = j.at("inv_std").get<std::vector<double>>();
    return s;
}

inline json learner_to_json(const ComponentModel& c) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KdeModel>) {
                return {{"type", "kde"},
                        {"training_points", to_json(m.training_points)},
                        {"bandwidth", m.bandwidth},
                        {"threshold", m.threshold}};
            } else if constexpr (std::is_same_v<T, OcsvmModel>) {
                return {{"type", "ocsvm"},
                        {"support_vectors", to_json(m.support_vectors)},
                        {"dual_coefficients", m.dual_coefficients},
                        {"rho", m.rho},
                        {"nu", m.nu},
                        {"gamma", m.gamma},
                        {"threshold", m.threshold}};
            } else if constexpr (std::is_same_v<T, IsolationForestModel>) {
                json trees = json::array();
                for (const auto& t : m.trees) {
                    json nodes = json::array();
                    for (const auto& n : t.nodes)
                        nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
                    trees.push_back(std::move(nodes));
                }
                return {{"type", "iforest"},
                        {"trees", std::move(trees)},
                        {"n_features", m.n_features},
                        {"subsample_size", m.subsample_size},
                        {"contamination", m.contamination},
                        {"threshold", m.threshold}};
            } else {
                return {{"type", "knn"},
                        {"training_points", to_json(m.training_points)},
                        {"k", m.k},
                        {"metric", m.metric == KnnMetric::euclidean ? "euclidean" : "cosine"},
                        {"threshold", m.threshold}};
            }
        },
        c.model);
}

inline void learner_from_json(const json& j, ComponentModel& c) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "kde") {
        KdeModel m;
        m.training_points = matrix_from_json(j.at("training_points"));
        m.bandwidth = j.at("bandwidth").get<double>();
        m.threshold = j.at("threshold").get<double>();
        c.model = std::move(m);
    } else if (type == "ocsvm") {
        OcsvmModel m;
        m.support_vectors = matrix_from_json(j.at("support_vectors"));
        m.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
        m.rho = j.at("rho").get<double>();
        m.nu = j.at("nu").get<double>();
        m.gamma = j.at("gamma").get<double>();
        m.threshold = j.at("threshold").get<double>();
        c.model = std::move(m);
    } else if (type == "iforest") {
        IsolationForestModel m;
        for (const auto& tj : j.at("trees")) {
            IsolationTree t;
            for (const auto& nj : tj) {
                IsolationTree::Node n;
                n.feature = nj.at(0).get<int>();
                n.split = nj.at(1).get<double>();
                n.left = nj.at(2).get<int>();
                n.right = nj.at(3).get<int>();
                n.size = nj.at(4).get<std::size_t>();
                t.nodes.push_back(n);
            }
            m.trees.push_back(std::move(t));
        }
        m.n_features = j.at("n_features").get<std::size_t>();
        m.subsample_size = j.at("subsample_size").get<std::size_t>();
        m.contamination = j.at("contamination").get<double>();
        m.threshold = j.at("threshold").get<double>();
        c.model = std::move(m);
    } else if (type == "knn") {
        KnnModel m;
        m.training_points = matrix_from_json(j.at("training_points"));
        m.k = j.at("k").get<std::size_t>();
        m.metric = j.at("metric").get<std::string>() == "cosine" ? KnnMetric::cosine
                                                                 : KnnMetric::euclidean;
        m.threshold = j.at("threshold").get<double>();
        c.model = std::move(m);
    } else {
        throw ParseError("model file: unknown learner type '" + type + "'");
    }
}

inline void save_ensemble(const std::string& path, const EnsembleModel& model) {
    json components = json::array();
    for (const auto& c : model.components) {
        components.push_back({{"config", to_json(c.config)},
                              {"name", c.name},
                              {"scaler", to_json(c.scaler)},
                              {"model", learner_to_json(c)},
                              {"threshold", c.threshold},
                              {"fpr_budget", c.fpr_budget},
                              {"calibration_scores", c.calibration_scores},
                              {"degenerate_training", c.degenerate_training}});
    }
    json cfg_components = json::array();
    for (const auto& c : model.config.components) cfg_components.push_back(to_json(c));
    json j{{"format", "exfilscope-ensemble"},
           {"format_version", kModelFormatVersion},
           {"tool_version", kToolVersion},
           {"config",
            {{"components", std::move(cfg_components)},
             {"target_fpr", model.config.target_fpr},
             {"combination", "or"},
             {"calibration_folds", model.config.calibration_folds}}},
           {"dft_dim", model.dft_dim},
           {"stft_flat_dim", model.stft_flat_dim},
           {"seed", model.seed},
           {"components", std::move(components)},
           {"warnings", model.warnings}};
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write model file: " + path);
    out << j.dump(2) << "\n";
}

inline EnsembleModel load_ensemble(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("model file is not valid JSON: " + path);
    if (j.value("format", "") != "exfilscope-ensemble")
        throw ParseError("not an exfilscope ensemble file: " + path);
    if (j.at("format_version").get<int>() != kModelFormatVersion)
        throw ParseError("unsupported model format version in " + path);

    EnsembleModel model;
    model.config.target_fpr = j.at("config").at("target_fpr").get<double>();
    model.config.calibration_folds = j.at("config").at("calibration_folds").get<std::size_t>();
    for (const auto& cj : j.at("config").at("components"))
        model.config.components.push_back(component_config_from_json(cj));
    model.dft_dim = j.at("dft_dim").get<std::size_t>();
    model.stft_flat_dim = j.at("stft_flat_dim").get<std::size_t>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& cj : j.at("components")) {
        ComponentModel c;
        c.config = component_config_from_json(cj.at("config"));
        c.name = cj.at("name").get<std::string>();
        c.scaler = standardizer_from_json(cj.at("scaler"));
        learner_from_json(cj.at("model"), c);
        c.threshold = cj.at("threshold").get<double>();
        c.fpr_budget = cj.at("fpr_budget").get<double>();
        c.calibration_scores = cj.at("calibration_scores").get<std::vector<double>>();
        c.degenerate_training = cj.at("degenerate_training").get<bool>();
        model.components.push_back(std::move(c));
    }
    return model;
}

// ---- verdicts (JSONL) ----

inline json to_json(const EnsembleVerdict& v) {
    json comps = json::object();
    for (const auto& [name, a] : v.component_anomaly)
        comps[name] = {{"decision", a ? "anomaly" : "normal"},
                       {"score", v.component_scores.at(name)}};
    return {{"key", to_json(v.key)},
            {"final", v.anomaly ? "anomaly" : "normal"},
            {"components", std::move(comps)}};
}

inline void write_verdicts(const std::string& path, const std::vector<EnsembleVerdict>& verdicts,
                           std::uint64_t seed, const std::string& config_text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write verdicts file: " + path);
    out << provenance_header("verdicts", seed, config_text).dump() << "\n";
    for (const auto& v : verdicts) out << to_json(v).dump() << "\n";
}

// ---- evaluation report ----

inline json to_json(const EvalReport& r) {
    json tpr = json::object(), beyond = json::object(), roc = json::object();
    for (const auto& [t, v] : r.tpr_by_type) tpr[std::to_string(t)] = v;
    for (const auto& [t, v] : r.tpr_beyond_avgdft) beyond[std::to_string(t)] = v;
    for (const auto& [t, curve] : r.roc) {
        json pts = json::array();
        for (const auto& [f, tp] : curve) pts.push_back({f, tp});
        roc[std::to_string(t)] = std::move(pts);
    }
    return {{"fpr", r.fpr},
            {"tpr_by_type", std::move(tpr)},
            {"tpr_beyond_avgdft", std::move(beyond)},
            {"roc", std::move(roc)},
            {"per_component_fpr", r.per_component_fpr},
            {"fold_fpr", r.fold_fpr},
            {"union_bound_ok", r.union_bound_ok},
            {"folds", r.folds}};
}

}  // namespace exfil
