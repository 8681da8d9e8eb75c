// Scalar reference kernels. kernels_avx2.cpp is a lane-for-lane transcription
// of this file; keep the operation order of the two in lockstep.
//
// Reductions run through four accumulator lanes (element i lands in lane
// i & 3, the tail included) combined as (l0 + l1) + (l2 + l3). That is the
// layout a 4-wide vector register imposes, so the AVX2 variant can match it
// exactly.

#include "kernels_impl.hpp"

#include <limits>

#include "tcer/vmath.hpp"

namespace tcer::kernels {
namespace {

double max4(const double* x, std::size_t n) {
    double m0 = -std::numeric_limits<double>::infinity();
    double m1 = m0, m2 = m0, m3 = m0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        m0 = (m0 > x[i]) ? m0 : x[i];
        m1 = (m1 > x[i + 1]) ? m1 : x[i + 1];
        m2 = (m2 > x[i + 2]) ? m2 : x[i + 2];
        m3 = (m3 > x[i + 3]) ? m3 : x[i + 3];
    }
    double m[4] = {m0, m1, m2, m3};
    for (; i < n; ++i) {
        double& lane = m[i & 3];
        lane = (lane > x[i]) ? lane : x[i];
    }
    double a = (m[0] > m[1]) ? m[0] : m[1];
    double b = (m[2] > m[3]) ? m[2] : m[3];
    return (a > b) ? a : b;
}

double sum_impl(const double* x, std::size_t n) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += x[i];
        a1 += x[i + 1];
        a2 += x[i + 2];
        a3 += x[i + 3];
    }
    double acc[4] = {a0, a1, a2, a3};
    for (; i < n; ++i) acc[i & 3] += x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot_impl(const double* a, const double* b, std::size_t n) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += a[i] * b[i];
        a1 += a[i + 1] * b[i + 1];
        a2 += a[i + 2] * b[i + 2];
        a3 += a[i + 3] * b[i + 3];
    }
    double acc[4] = {a0, a1, a2, a3};
    for (; i < n; ++i) acc[i & 3] += a[i] * b[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void softmax_impl(const double* logits, std::size_t n, double inv_temp, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = logits[i] * inv_temp;
    double m = max4(out, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = vmath::exp(out[i] - m);
    double s = sum_impl(out, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = out[i] / s;
}

void log_softmax_impl(const double* logits, std::size_t n, double inv_temp, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = logits[i] * inv_temp;
    double m = max4(out, n);
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += vmath::exp(out[i] - m);
        a1 += vmath::exp(out[i + 1] - m);
        a2 += vmath::exp(out[i + 2] - m);
        a3 += vmath::exp(out[i + 3] - m);
    }
    double acc[4] = {a0, a1, a2, a3};
    for (; i < n; ++i) acc[i & 3] += vmath::exp(out[i] - m);
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    double lse = m + vmath::log(s);
    for (std::size_t j = 0; j < n; ++j) out[j] = out[j] - lse;
}

double entropy_impl(const double* p, std::size_t n) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += (p[i] > 0.0) ? p[i] * vmath::log(p[i]) : 0.0;
        a1 += (p[i + 1] > 0.0) ? p[i + 1] * vmath::log(p[i + 1]) : 0.0;
        a2 += (p[i + 2] > 0.0) ? p[i + 2] * vmath::log(p[i + 2]) : 0.0;
        a3 += (p[i + 3] > 0.0) ? p[i + 3] * vmath::log(p[i + 3]) : 0.0;
    }
    double acc[4] = {a0, a1, a2, a3};
    for (; i < n; ++i) acc[i & 3] += (p[i] > 0.0) ? p[i] * vmath::log(p[i]) : 0.0;
    return -((acc[0] + acc[1]) + (acc[2] + acc[3]));
}

void log_array_impl(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = vmath::log(x[i]);
}

void exp_array_impl(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = vmath::exp(x[i]);
}

void log_ratio_smoothed_impl(const double* p, const double* q, std::size_t n, double eps,
                             double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = vmath::log((p[i] + eps) / (q[i] + eps));
}

void gate_array_impl(const double* p, std::size_t n, double lambda, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = vmath::pow01(1.0 - p[i], lambda);
}

double coverage_impl(const double* p, std::size_t n, double lambda) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += p[i] * vmath::pow01(1.0 - p[i], lambda);
        a1 += p[i + 1] * vmath::pow01(1.0 - p[i + 1], lambda);
        a2 += p[i + 2] * vmath::pow01(1.0 - p[i + 2], lambda);
        a3 += p[i + 3] * vmath::pow01(1.0 - p[i + 3], lambda);
    }
    double acc[4] = {a0, a1, a2, a3};
    for (; i < n; ++i) acc[i & 3] += p[i] * vmath::pow01(1.0 - p[i], lambda);
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

const KernelOps& scalar_ops() {
    static const KernelOps ops = {
        softmax_impl,   log_softmax_impl,       entropy_impl,    sum_impl,      dot_impl,
        log_array_impl, exp_array_impl,         log_ratio_smoothed_impl,        gate_array_impl,
        coverage_impl,
    };
    return ops;
}

}  // namespace tcer::kernels
