#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "exfil/core.hpp"
#include "exfil/flow.hpp"

namespace exfil {

// Table-driven exfiltration families:
//   1 periodic / constant egress     2 jittered / constant egress
//   3 periodic / variable egress     4 jittered / variable egress
struct ExfilScenario {
    int exfil_type = 1;
    double period_s = 0.0;                    // nominal period T (whole seconds)
    std::optional<double> jitter;             // j in (0,1), types 2 and 4
    double mean_egress_bytes = 0.0;           // types 1 and 2
    double mean_ingress_bytes = 0.0;
    double byte_std = 0.0;                    // types 1 and 2
    std::optional<double> egress_max_bytes;   // types 3 and 4
    std::optional<double> egress_min_bytes;
    double duration_s = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

// Per-connection byte counts are capped by the modeled 4 MB/s link.
inline constexpr double kMinExfilBytes = 1e3;
inline constexpr double kMaxExfilBytes = 4e6;
inline constexpr double kMinPeriodS = 1.0;
inline constexpr double kMaxPeriodS = 8.64e4;
inline constexpr double kMinDurationS = 3600.0;
inline constexpr double kMaxDurationS = 2.6784e6;  // one month

// "between 250 and 550 bytes depending on the size of the mean":
// linear in the log of the mean across the byte range.
inline double interpolated_byte_std(double mean_bytes) {
    const double t = (std::log(mean_bytes) - std::log(kMinExfilBytes)) /
                     (std::log(kMaxExfilBytes) - std::log(kMinExfilBytes));
    return 250.0 + 300.0 * std::clamp(t, 0.0, 1.0);
}

inline std::int64_t truncated_gaussian_bytes(std::mt19937_64& rng, double mean, double std) {
    std::normal_distribution<double> n(mean, std);
    double v = std::min(n(rng), kMaxExfilBytes);
    return static_cast<std::int64_t>(std::llround(std::max(v, 1.0)));
}

}  // namespace detail

inline ExfilScenario sample_scenario(int exfil_type, std::uint64_t rng_seed,
                                     double max_duration_s = detail::kMaxDurationS) {
    if (exfil_type < 1 || exfil_type > 4) throw ConfigError("exfil_type must be 1..4");
    if (max_duration_s < detail::kMinDurationS)
        throw ConfigError("max_duration_s must be at least one hour");
    std::mt19937_64 rng(rng_seed);
    ExfilScenario sc;
    sc.exfil_type = exfil_type;
    sc.seed = rng_seed;
    sc.period_s = std::max(1.0, std::round(detail::log_uniform(rng, detail::kMinPeriodS,
                                                               detail::kMaxPeriodS)));
    sc.mean_ingress_bytes = detail::log_uniform(rng, detail::kMinExfilBytes, detail::kMaxExfilBytes);
    if (exfil_type == 1 || exfil_type == 2) {
        sc.mean_egress_bytes = detail::log_uniform(rng, detail::kMinExfilBytes, detail::kMaxExfilBytes);
        sc.byte_std = detail::interpolated_byte_std(sc.mean_egress_bytes);
    } else {
        const double bmax = detail::log_uniform(rng, detail::kMinExfilBytes, detail::kMaxExfilBytes);
        const double bmin = detail::log_uniform(rng, detail::kMinExfilBytes, bmax);
        sc.egress_max_bytes = bmax;
        sc.egress_min_bytes = bmin;
        sc.mean_egress_bytes = 0.5 * (bmin + bmax);
    }
    if (exfil_type == 2 || exfil_type == 4) {
        std::uniform_real_distribution<double> ju(std::nextafter(0.0, 1.0), 1.0);
        sc.jitter = ju(rng);
    }
    std::uniform_real_distribution<double> du(detail::kMinDurationS,
                                              std::min(detail::kMaxDurationS, max_duration_s));
    sc.duration_s = du(rng);
    return sc;
}

// Generates the labeled communication for a scenario inside an analysis
// window. Types 1 and 3 are exactly periodic at T; types 2 and 4 draw each
// inter-arrival from Uniform[T - jT, T]. Ingress stays Gaussian around its
// mean, in sync with the egress connections. The activity start is placed
// uniformly so it fits the window.
inline Communication generate_exfil(const ExfilScenario& sc, std::int64_t window_start,
                                    std::int64_t window_end, const CommunicationKey& key) {
    const double window_len = static_cast<double>(window_end - window_start);
    if (sc.duration_s > window_len)
        throw ConfigError("scenario duration exceeds the analysis window");

    std::mt19937_64 rng(derive_seed(sc.seed, 0x9e11));
    std::uniform_real_distribution<double> su(0.0, window_len - sc.duration_s);
    const std::int64_t start = window_start + static_cast<std::int64_t>(std::floor(su(rng)));
    const std::int64_t stop = start + static_cast<std::int64_t>(sc.duration_s);

    const bool periodic = sc.exfil_type == 1 || sc.exfil_type == 3;
    const bool constant = sc.exfil_type == 1 || sc.exfil_type == 2;
    const double ingress_std = detail::interpolated_byte_std(sc.mean_ingress_bytes);

    Communication comm;
    comm.key = key;
    comm.window_start = window_start;
    comm.window_end = window_end;

    std::int64_t t = start;
    while (t <= stop) {
        Sample s;
        s.t = t;
        if (constant) {
            s.egress_bytes = detail::truncated_gaussian_bytes(rng, sc.mean_egress_bytes, sc.byte_std);
        } else {
            std::uniform_real_distribution<double> bu(*sc.egress_min_bytes, *sc.egress_max_bytes);
            s.egress_bytes = static_cast<std::int64_t>(std::llround(bu(rng)));
        }
        s.ingress_bytes = detail::truncated_gaussian_bytes(rng, sc.mean_ingress_bytes, ingress_std);
        comm.samples.push_back(s);

        std::int64_t step;
        if (periodic) {
            step = static_cast<std::int64_t>(sc.period_s);
        } else {
            std::uniform_real_distribution<double> iu(sc.period_s * (1.0 - *sc.jitter), sc.period_s);
            step = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(iu(rng))));
        }
        t += step;
    }
    return comm;
}

enum class NormalProfile { client, gateway, server };

inline NormalProfile normal_profile_from_string(const std::string& s) {
    if (s == "client") return NormalProfile::client;
    if (s == "gateway") return NormalProfile::gateway;
    if (s == "server") return NormalProfile::server;
    throw ConfigError("unknown normal profile: " + s);
}

namespace detail {

inline std::int64_t lognormal_bytes(std::mt19937_64& rng, double log_mean, double sigma) {
    std::lognormal_distribution<double> d(log_mean, sigma);
    return static_cast<std::int64_t>(std::llround(std::clamp(d(rng), 0.0, 4e6)));
}

// Second-of-day clustered around working hours.
inline std::int64_t diurnal_second(std::mt19937_64& rng) {
    std::normal_distribution<double> n(13.0 * 3600.0, 2.5 * 3600.0);
    const double s = n(rng);
    return static_cast<std::int64_t>(std::llround(std::clamp(s, 0.0, 86399.0)));
}

inline Communication make_comm(std::vector<Sample> samples, const CommunicationKey& key,
                               std::int64_t ws, std::int64_t we) {
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
    Communication comm;
    comm.key = key;
    comm.window_start = ws;
    comm.window_end = we;
    for (const auto& s : samples) {
        if (s.egress_bytes + s.ingress_bytes == 0) continue;
        if (!comm.samples.empty() && comm.samples.back().t == s.t) {
            comm.samples.back().egress_bytes += s.egress_bytes;
            comm.samples.back().ingress_bytes += s.ingress_bytes;
        } else {
            comm.samples.push_back(s);
        }
    }
    return comm;
}

// Client workstation: ingress-heavy, mostly short burst sessions during
// working hours, connection-sparse. Mirrors the qualitative traffic shape
// reported for enterprise desktops.
inline Communication normal_client_comm(std::mt19937_64& rng, const CommunicationKey& key,
                                        std::int64_t ws, std::int64_t we) {
    std::lognormal_distribution<double> n_dist(std::log(5.0), 1.1);
    const std::size_t n = static_cast<std::size_t>(
        std::clamp<std::int64_t>(std::llround(n_dist(rng)), 1, 2000));

    // log(b_I / b_E) ~ N(log 4, 1.2) puts the bulk of communications on the
    // ingress-heavy side; client workstations rarely push large uploads.
    std::normal_distribution<double> ratio_dist(std::log(4.0), 1.2);
    const double log_ratio = ratio_dist(rng);
    std::uniform_real_distribution<double> be_dist(std::log(50.0), std::log(5e4));
    const double log_be = be_dist(rng);
    const double log_bi = std::min(log_be + log_ratio, std::log(4e6));

    const std::int64_t n_days = (we - ws) / 86400;
    std::uniform_int_distribution<std::int64_t> day_dist(0, std::max<std::int64_t>(n_days - 1, 0));
    std::bernoulli_distribution burst(0.75);

    std::vector<Sample> samples;
    if (burst(rng)) {
        // One session: connections clustered over seconds to minutes.
        const std::int64_t day = day_dist(rng);
        const std::int64_t base = ws + day * 86400 + diurnal_second(rng);
        std::lognormal_distribution<double> gap_dist(std::log(10.0), 1.5);
        std::int64_t t = base;
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            s.t = std::min(t, we);
            s.egress_bytes = lognormal_bytes(rng, log_be, 0.8);
            s.ingress_bytes = lognormal_bytes(rng, log_bi, 0.8);
            samples.push_back(s);
            t += std::max<std::int64_t>(1, std::llround(gap_dist(rng)));
        }
    } else {
        // Revisited service: connections spread over several days.
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            s.t = ws + day_dist(rng) * 86400 + diurnal_second(rng);
            s.egress_bytes = lognormal_bytes(rng, log_be, 0.8);
            s.ingress_bytes = lognormal_bytes(rng, log_bi, 0.8);
            samples.push_back(s);
        }
    }
    return make_comm(std::move(samples), key, ws, we);
}

// Server: egress-heavy, denser, with a periodic sub-population and long
// durations.
inline Communication normal_server_comm(std::mt19937_64& rng, const CommunicationKey& key,
                                        std::int64_t ws, std::int64_t we) {
    std::lognormal_distribution<double> n_dist(std::log(20.0), 1.3);
    const std::size_t n = static_cast<std::size_t>(
        std::clamp<std::int64_t>(std::llround(n_dist(rng)), 1, 5000));

    std::normal_distribution<double> ratio_dist(std::log(0.25), 1.2);  // egress-heavy
    const double log_ratio = ratio_dist(rng);
    std::uniform_real_distribution<double> be_dist(std::log(500.0), std::log(5e5));
    const double log_be = be_dist(rng);
    const double log_bi = std::min(log_be + log_ratio, std::log(4e6));

    const std::int64_t span = we - ws;
    std::vector<Sample> samples;
    std::bernoulli_distribution is_periodic(0.4);
    if (is_periodic(rng)) {
        const double period = log_uniform(rng, 300.0, 86400.0);
        std::uniform_real_distribution<double> start_u(0.0, std::max(1.0, static_cast<double>(span) - period * static_cast<double>(n)));
        std::int64_t t = ws + static_cast<std::int64_t>(start_u(rng));
        for (std::size_t i = 0; i < n && t <= we; ++i) {
            Sample s;
            s.t = t;
            s.egress_bytes = lognormal_bytes(rng, log_be, 0.6);
            s.ingress_bytes = lognormal_bytes(rng, log_bi, 0.6);
            samples.push_back(s);
            t += static_cast<std::int64_t>(period);
        }
    } else {
        std::uniform_int_distribution<std::int64_t> t_dist(ws, we);
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            s.t = t_dist(rng);
            s.egress_bytes = lognormal_bytes(rng, log_be, 0.6);
            s.ingress_bytes = lognormal_bytes(rng, log_bi, 0.6);
            samples.push_back(s);
        }
    }
    return make_comm(std::move(samples), key, ws, we);
}

}  // namespace detail

// Synthetic remote endpoints come from the benchmarking range 198.18.0.0/15.
inline std::string synthetic_remote_ip(std::size_t index) {
    const std::size_t a = index / (256 * 256);
    const std::size_t b = (index / 256) % 256;
    const std::size_t c = index % 256;
    return "198." + std::to_string(18 + a % 2) + "." + std::to_string(b) + "." + std::to_string(c);
}

// Desk-scale stand-in for presumed-normal traffic; the paper trains on
// private enterprise data. Deterministic per (profile, n, seed) with
// counter-derived sub-seeds.
inline std::vector<Communication> generate_normal_corpus(NormalProfile profile, std::size_t n,
                                                         std::int64_t window_start,
                                                         std::int64_t window_end,
                                                         std::uint64_t seed,
                                                         const std::string& host = "10.0.0.5") {
    if (n < 1) throw ContractError("generate_normal_corpus: n must be >= 1");
    std::vector<Communication> comms;
    comms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        std::bernoulli_distribution https(0.75);
        int port = 443;
        bool server_like = false;
        switch (profile) {
            case NormalProfile::client:
                port = https(rng) ? 443 : 80;
                break;
            case NormalProfile::server:
                port = 25;
                server_like = true;
                break;
            case NormalProfile::gateway: {
                std::bernoulli_distribution srv(0.5);
                server_like = srv(rng);
                port = server_like ? 25 : (https(rng) ? 443 : 80);
                break;
            }
        }
        CommunicationKey key{host, synthetic_remote_ip(i), port};
        Communication comm = server_like
                                 ? detail::normal_server_comm(rng, key, window_start, window_end)
                                 : detail::normal_client_comm(rng, key, window_start, window_end);
        if (comm.samples.empty()) {
            // Degenerate draw (all-zero bytes); force a minimal connection.
            comm.samples.push_back({window_start + static_cast<std::int64_t>(i % 86400), 1, 1});
        }
        comms.push_back(std::move(comm));
    }
    return comms;
}

}  // namespace exfil
