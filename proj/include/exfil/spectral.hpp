#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "exfil/core.hpp"
#include "exfil/flow.hpp"

namespace exfil {

// Fixed frequency sampling shared by every communication in a run. Periods
// are strictly increasing integers in seconds, dense at the short end and
// sparse at the long end; frequencies[i] = 1 / periods[i].
struct FrequencyGrid {
    std::vector<double> periods_s;
    std::vector<double> frequencies_hz;
    double window_length_s = 0.0;

    std::size_t dim() const { return frequencies_hz.size(); }

    bool operator==(const FrequencyGrid&) const = default;
};

// Seeds the period list with powers of two up to T, then runs uniform
// midpoint-bisection rounds until at least target_dim periods exist. The
// overshoot from the final round is trimmed by dropping that round's
// largest-period insertions, so two runs agree bit-for-bit.
inline FrequencyGrid build_frequency_grid(double window_length_s, std::size_t target_dim) {
    if (window_length_s < 2.0) throw ConfigError("frequency grid requires window_length_s >= 2");

    std::vector<std::int64_t> periods;
    for (std::int64_t p = 1; static_cast<double>(p) <= window_length_s; p *= 2) periods.push_back(p);
    if (target_dim < periods.size())
        throw ConfigError("target_dim " + std::to_string(target_dim) + " is below the seed sequence size " +
                          std::to_string(periods.size()) + "; raise the dim or shrink the window");

    std::vector<std::int64_t> last_added;
    while (periods.size() < target_dim) {
        std::vector<std::int64_t> next;
        std::vector<std::int64_t> added;
        next.reserve(periods.size() * 2);
        for (std::size_t i = 0; i + 1 < periods.size(); ++i) {
            next.push_back(periods[i]);
            if (periods[i + 1] - periods[i] >= 2) {
                const std::int64_t mid = (periods[i] + periods[i + 1]) / 2;
                next.push_back(mid);
                added.push_back(mid);
            }
        }
        next.push_back(periods.back());
        if (added.empty())
            throw ConfigError("cannot reach target_dim: integer-second resolution exhausted");
        periods = std::move(next);
        last_added = std::move(added);
    }

    if (periods.size() > target_dim) {
        std::size_t excess = periods.size() - target_dim;
        // last_added is ascending; drop its largest members.
        std::vector<std::int64_t> drop(last_added.end() - static_cast<std::ptrdiff_t>(excess),
                                       last_added.end());
        std::vector<std::int64_t> kept;
        kept.reserve(target_dim);
        std::size_t di = 0;
        for (std::int64_t p : periods) {
            if (di < drop.size() && p == drop[di]) {
                ++di;
                continue;
            }
            kept.push_back(p);
        }
        periods = std::move(kept);
    }

    FrequencyGrid grid;
    grid.window_length_s = window_length_s;
    grid.periods_s.reserve(periods.size());
    grid.frequencies_hz.reserve(periods.size());
    for (std::int64_t p : periods) {
        grid.periods_s.push_back(static_cast<double>(p));
        grid.frequencies_hz.push_back(1.0 / static_cast<double>(p));
    }
    return grid;
}

// Complex amplitudes of one direction's byte series on the grid.
struct Spectrum {
    std::vector<std::complex<double>> values;
    Direction direction = Direction::egress;
    bool normalized = false;
};

// Real amplitude vector |Y(f)| divided by its own mean; mean of a non-zero
// output is exactly 1. A raw all-zero spectrum yields zeros and the
// degenerate flag.
struct NormalizedAmplitudes {
    std::vector<double> values;
    Direction direction = Direction::egress;
    bool degenerate = false;
};

namespace detail {

inline std::int64_t direction_bytes(const Sample& s, Direction d) {
    return d == Direction::egress ? s.egress_bytes : s.ingress_bytes;
}

}  // namespace detail

// Direct evaluation of Y(f_m) = sum_n b(t_n) exp(-2 pi i f_m t_n), with
// times shifted so t_0 = 0 (amplitudes are invariant to the shift).
inline Spectrum nudft(const Communication& comm, const FrequencyGrid& grid, Direction direction) {
    if (comm.samples.empty()) throw ContractError("nudft: communication has no samples");
    if (grid.dim() == 0) throw ContractError("nudft: empty frequency grid");

    const std::int64_t t0 = comm.samples.front().t;
    Spectrum spec;
    spec.direction = direction;
    spec.values.assign(grid.dim(), {0.0, 0.0});
    for (const auto& s : comm.samples) {
        const double b = static_cast<double>(detail::direction_bytes(s, direction));
        if (b == 0.0) continue;
        const double t = static_cast<double>(s.t - t0);
        for (std::size_t m = 0; m < grid.dim(); ++m) {
            // Reduce t modulo the period before forming the angle; f t can
            // reach ~1e7 cycles and loses ~7 digits of phase otherwise.
            const double p = grid.periods_s[m];
            const double phase = -2.0 * M_PI * std::fmod(t, p) / p;
            spec.values[m] += std::complex<double>(b * std::cos(phase), b * std::sin(phase));
        }
    }
    return spec;
}

inline NormalizedAmplitudes normalize_spectrum(const Spectrum& spec) {
    if (spec.normalized) throw ContractError("normalize_spectrum: input already normalized");
    NormalizedAmplitudes out;
    out.direction = spec.direction;
    out.values.resize(spec.values.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        out.values[i] = std::abs(spec.values[i]);
        mean += out.values[i];
    }
    mean /= static_cast<double>(spec.values.size());
    if (mean == 0.0) {
        out.degenerate = true;
        return out;
    }
    for (double& v : out.values) v /= mean;
    return out;
}

// Floor applied before taking the log of a zero mean amplitude; far below
// any real traffic (>= 1 byte).
inline constexpr double kAvgDftEpsilonBytes = 1e-3;

// (log mean |Y_I|, log mean |Y_E|), natural log of the unnormalized mean
// amplitudes.
inline std::pair<double, double> avg_dft_features(const Communication& comm, const FrequencyGrid& grid) {
    auto log_mean = [&](Direction d) {
        const Spectrum spec = nudft(comm, grid, d);
        double mean = 0.0;
        for (const auto& v : spec.values) mean += std::abs(v);
        mean /= static_cast<double>(spec.values.size());
        return std::log(std::max(mean, kAvgDftEpsilonBytes));
    };
    return {log_mean(Direction::ingress), log_mean(Direction::egress)};
}

// Rectangular-window STFT magnitudes squared, rows ordered by window time.
struct Spectrogram {
    double window_width_s = 0.0;  // a
    std::size_t rows = 0;
    std::size_t cols = 0;             // stft grid dim
    std::vector<double> flattened;    // row-major, rows * cols
    Direction direction = Direction::egress;

    double at(std::size_t r, std::size_t c) const { return flattened[r * cols + c]; }
};

// Non-overlapping windows of width a anchored at span start; the k-th
// window covers [start + k a, start + (k+1) a), the final one may be
// partial and absorbs a sample at exactly span end. Phases use the same
// t_0-shifted convention as nudft, so summing F over windows recovers the
// full-window transform.
inline Spectrogram stft(const Communication& comm, const FrequencyGrid& stft_grid, double window_width_s,
                        std::int64_t span_start, std::int64_t span_end,
                        Direction direction = Direction::egress) {
    const double span = static_cast<double>(span_end - span_start);
    if (window_width_s <= 0.0 || window_width_s > span)
        throw ConfigError("stft: window width must lie in (0, span]");
    if (comm.samples.empty()) throw ContractError("stft: communication has no samples");

    const std::size_t n_windows = static_cast<std::size_t>(std::ceil(span / window_width_s));
    const std::size_t dim = stft_grid.dim();
    std::vector<std::complex<double>> acc(n_windows * dim, {0.0, 0.0});

    const std::int64_t t0 = comm.samples.front().t;
    for (const auto& s : comm.samples) {
        if (s.t < span_start || s.t > span_end) continue;
        const double b = static_cast<double>(detail::direction_bytes(s, direction));
        if (b == 0.0) continue;
        std::size_t w = static_cast<std::size_t>(static_cast<double>(s.t - span_start) / window_width_s);
        if (w >= n_windows) w = n_windows - 1;
        const double t = static_cast<double>(s.t - t0);
        std::complex<double>* row = acc.data() + w * dim;
        for (std::size_t m = 0; m < dim; ++m) {
            const double p = stft_grid.periods_s[m];
            const double phase = -2.0 * M_PI * std::fmod(t, p) / p;
            row[m] += std::complex<double>(b * std::cos(phase), b * std::sin(phase));
        }
    }

    Spectrogram sg;
    sg.window_width_s = window_width_s;
    sg.rows = n_windows;
    sg.cols = dim;
    sg.direction = direction;
    sg.flattened.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) sg.flattened[i] = std::norm(acc[i]);
    return sg;
}

// The three per-communication representations plus the cached summary.
struct FeatureBundle {
    CommunicationKey key;
    double avg_dft_ingress = 0.0;  // log mean |Y_I|
    double avg_dft_egress = 0.0;   // log mean |Y_E|
    std::vector<double> dft_e;     // normalized egress amplitudes
    std::vector<double> dft_i;     // normalized ingress amplitudes
    std::vector<double> stft;      // flattened spectrogram
    TrafficSummary summary;
};

struct FeatureConfig {
    std::size_t dft_dim = 500;
    std::size_t stft_dim = 40;
    double stft_window_s = 8.0 * 3600.0;
    Direction stft_direction = Direction::egress;
};

inline FeatureBundle featurize(const Communication& comm, const FrequencyGrid& dft_grid,
                               const FrequencyGrid& stft_grid, const FeatureConfig& cfg) {
    FeatureBundle fb;
    fb.key = comm.key;
    const Spectrum ye = nudft(comm, dft_grid, Direction::egress);
    const Spectrum yi = nudft(comm, dft_grid, Direction::ingress);
    auto log_mean_amp = [](const Spectrum& s) {
        double mean = 0.0;
        for (const auto& v : s.values) mean += std::abs(v);
        mean /= static_cast<double>(s.values.size());
        return std::log(std::max(mean, kAvgDftEpsilonBytes));
    };
    fb.avg_dft_ingress = log_mean_amp(yi);
    fb.avg_dft_egress = log_mean_amp(ye);
    fb.dft_e = normalize_spectrum(ye).values;
    fb.dft_i = normalize_spectrum(yi).values;
    fb.stft = stft(comm, stft_grid, cfg.stft_window_s, comm.window_start, comm.window_end,
                   cfg.stft_direction)
                  .flattened;
    fb.summary = summarize(comm);
    return fb;
}

}  // namespace exfil
