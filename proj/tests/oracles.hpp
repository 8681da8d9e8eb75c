#pragma once

// Test-only reference implementations. Everything here is deliberately
// naive (long double, straight loops, libm) and independent of the library
// code paths it checks.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline std::int64_t ordered_bits(double x) {
    std::int64_t b;
    std::memcpy(&b, &x, sizeof(b));
    return b < 0 ? std::numeric_limits<std::int64_t>::min() - b : b;
}

// ulp distance between two finite doubles.
inline std::int64_t ulp_diff(double a, double b) {
    std::int64_t d = ordered_bits(a) - ordered_bits(b);
    return d < 0 ? -d : d;
}

inline double rel_err(double got, double want) {
    if (got == want) return 0.0;
    double denom = std::fabs(want);
    if (denom == 0.0) return std::fabs(got);
    return std::fabs(got - want) / denom;
}

inline std::vector<double> softmax_ld(const std::vector<double>& logits, double inv_temp) {
    long double m = -std::numeric_limits<long double>::infinity();
    for (double v : logits) m = std::max(m, static_cast<long double>(v) * inv_temp);
    long double s = 0.0L;
    std::vector<long double> e(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(static_cast<long double>(logits[i]) * inv_temp - m);
        s += e[i];
    }
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(e[i] / s);
    return out;
}

inline std::vector<double> log_softmax_ld(const std::vector<double>& logits, double inv_temp) {
    long double m = -std::numeric_limits<long double>::infinity();
    for (double v : logits) m = std::max(m, static_cast<long double>(v) * inv_temp);
    long double s = 0.0L;
    for (double v : logits) s += std::exp(static_cast<long double>(v) * inv_temp - m);
    long double lse = m + std::log(s);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        out[i] = static_cast<double>(static_cast<long double>(logits[i]) * inv_temp - lse);
    return out;
}

inline double entropy_ld(const std::vector<double>& probs) {
    long double h = 0.0L;
    for (double p : probs)
        if (p > 0.0) h -= static_cast<long double>(p) * std::log(static_cast<long double>(p));
    return static_cast<double>(h);
}

inline double sum_ld(const std::vector<double>& x) {
    long double s = 0.0L;
    for (double v : x) s += v;
    return static_cast<double>(s);
}

inline double dot_ld(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
    return static_cast<double>(s);
}

// Central finite difference of f at x along coordinate i.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double step) {
    double x0 = x[i];
    x[i] = x0 + step;
    double up = f(x);
    x[i] = x0 - step;
    double dn = f(x);
    return (up - dn) / (2.0 * step);
}

// Random probability vector of the given size (normalized uniforms).
inline std::vector<double> random_dist(std::mt19937_64& gen, std::size_t n) {
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) {
        v = u(gen);
        s += v;
    }
    for (auto& v : p) v /= s;
    return p;
}

}  // namespace oracle
