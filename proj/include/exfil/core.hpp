#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace exfil {

// Exit codes used by the CLI; exceptions carry the matching code.
enum class ErrorCode : int {
    config = 2,
    parse = 3,
    contract = 4,
    non_convergence = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(ErrorCode::config, msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(ErrorCode::parse, msg) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(ErrorCode::contract, msg) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double gap) : Error(ErrorCode::non_convergence, msg), gap_(gap) {}
    double duality_gap() const { return gap_; }

private:
    double gap_ = 0.0;
};

// Dense row-major matrix. Plain storage, no linear algebra beyond what the
// learners need.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    void push_row(const std::vector<double>& r) {
        if (rows == 0 && cols == 0) cols = r.size();
        if (r.size() != cols) throw ContractError("push_row: dimension mismatch");
        data.insert(data.end(), r.begin(), r.end());
        ++rows;
    }

    bool operator==(const Matrix& o) const = default;
};

inline double squared_distance(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

// splitmix64; used to derive independent sub-seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    return splitmix64(master ^ splitmix64(counter + 0x9e3779b97f4a7c15ULL));
}

// Empirical quantile with linear interpolation; q in [0,1].
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ContractError("quantile of empty set");
    std::sort(values.begin(), values.end());
    if (q <= 0.0) return values.front();
    if (q >= 1.0) return values.back();
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

inline double log_sum_exp(const std::vector<double>& xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace exfil
