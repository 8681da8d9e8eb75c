// AVX2 kernel variant: a lane-for-lane transcription of kernels_scalar.cpp.
// Vector bodies replay the exact scalar operation sequence (mul/add pairs,
// never FMA, same reduction lanes), and the log4/exp4 helpers mirror
// vmath.cpp; lanes outside the fast domain fall back to the scalar
// functions, which are bit-identical anyway. Tails shorter than a vector
// run the scalar expressions directly.

#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstdint>
#include <limits>

#include "tcer/vmath.hpp"

namespace tcer::kernels {
namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;

constexpr double kLg1 = 6.666666666666735130e-01;
constexpr double kLg2 = 3.999999999940941908e-01;
constexpr double kLg3 = 2.857142874366239149e-01;
constexpr double kLg4 = 2.222219843214978396e-01;
constexpr double kLg5 = 1.818357216161805012e-01;
constexpr double kLg6 = 1.531383769920937332e-01;
constexpr double kLg7 = 1.479819860511658591e-01;

constexpr double kP1 = 1.66666666666666019037e-01;
constexpr double kP2 = -2.77777777770155933842e-03;
constexpr double kP3 = 6.61375632143793436117e-05;
constexpr double kP4 = -1.65339022054652515390e-06;
constexpr double kP5 = 4.13813679705723846039e-08;

inline __m256d scalar_fallback_log(__m256d x) {
    alignas(32) double in[4], out[4];
    _mm256_store_pd(in, x);
    for (int j = 0; j < 4; ++j) out[j] = vmath::log(in[j]);
    return _mm256_load_pd(out);
}

inline __m256d log4(__m256d x) {
    const __m256d min_normal = _mm256_set1_pd(0x1p-1022);
    const __m256d max_finite = _mm256_set1_pd(0x1.fffffffffffffp+1023);
    __m256d ok = _mm256_and_pd(_mm256_cmp_pd(x, min_normal, _CMP_GE_OQ),
                               _mm256_cmp_pd(x, max_finite, _CMP_LE_OQ));
    if (_mm256_movemask_pd(ok) != 0xF) return scalar_fallback_log(x);

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d half = _mm256_set1_pd(0.5);

    __m256i ix = _mm256_castpd_si256(x);
    __m256i e = _mm256_sub_epi64(_mm256_srli_epi64(ix, 52), _mm256_set1_epi64x(1023));
    __m256i mant_hi = _mm256_and_si256(_mm256_srli_epi64(ix, 32), _mm256_set1_epi64x(0xfffff));
    __m256i i_ = _mm256_and_si256(_mm256_add_epi64(mant_hi, _mm256_set1_epi64x(0x95f64)),
                                  _mm256_set1_epi64x(0x100000));
    __m256i lo32 = _mm256_and_si256(ix, _mm256_set1_epi64x(0xffffffffLL));
    __m256i hi32 = _mm256_slli_epi64(
        _mm256_or_si256(mant_hi, _mm256_xor_si256(i_, _mm256_set1_epi64x(0x3ff00000))), 32);
    __m256d xr = _mm256_castsi256_pd(_mm256_or_si256(lo32, hi32));
    __m256i kk = _mm256_add_epi64(e, _mm256_srli_epi64(i_, 20));

    const __m256i magic = _mm256_set1_epi64x(0x4338000000000000LL);
    __m256d dk = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(kk, magic)),
                               _mm256_castsi256_pd(magic));

    __m256d f = _mm256_sub_pd(xr, one);
    __m256d hf = _mm256_mul_pd(half, f);
    __m256d hfsq = _mm256_mul_pd(hf, f);
    __m256d s = _mm256_div_pd(f, _mm256_add_pd(two, f));
    __m256d z = _mm256_mul_pd(s, s);
    __m256d w = _mm256_mul_pd(z, z);
    __m256d t1 = _mm256_mul_pd(
        w, _mm256_add_pd(_mm256_set1_pd(kLg2),
                         _mm256_mul_pd(w, _mm256_add_pd(_mm256_set1_pd(kLg4),
                                                        _mm256_mul_pd(w, _mm256_set1_pd(kLg6))))));
    __m256d t2 = _mm256_mul_pd(
        z,
        _mm256_add_pd(
            _mm256_set1_pd(kLg1),
            _mm256_mul_pd(
                w, _mm256_add_pd(_mm256_set1_pd(kLg3),
                                 _mm256_mul_pd(w, _mm256_add_pd(_mm256_set1_pd(kLg5),
                                                                _mm256_mul_pd(
                                                                    w, _mm256_set1_pd(kLg7))))))));
    __m256d r = _mm256_add_pd(t2, t1);
    __m256d v1 = _mm256_mul_pd(s, _mm256_add_pd(hfsq, r));
    __m256d v2 = _mm256_mul_pd(dk, _mm256_set1_pd(kLn2Lo));
    __m256d v3 = _mm256_sub_pd(hfsq, _mm256_add_pd(v1, v2));
    __m256d v4 = _mm256_sub_pd(v3, f);
    return _mm256_sub_pd(_mm256_mul_pd(dk, _mm256_set1_pd(kLn2Hi)), v4);
}

inline __m256d scalar_fallback_exp(__m256d x) {
    alignas(32) double in[4], out[4];
    _mm256_store_pd(in, x);
    for (int j = 0; j < 4; ++j) out[j] = vmath::exp(in[j]);
    return _mm256_load_pd(out);
}

inline __m256d exp4(__m256d x) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d absx = _mm256_andnot_pd(sign_mask, x);
    __m256d ok = _mm256_cmp_pd(absx, _mm256_set1_pd(708.0), _CMP_LE_OQ);  // NaN -> fallback
    if (_mm256_movemask_pd(ok) != 0xF) return scalar_fallback_exp(x);

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);

    __m256d halfs = _mm256_or_pd(_mm256_set1_pd(0.5), _mm256_and_pd(sign_mask, x));
    __m256d kd = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(kInvLn2), x), halfs);
    __m128i k32 = _mm256_cvttpd_epi32(kd);
    __m256d t = _mm256_cvtepi32_pd(k32);
    __m256d hi = _mm256_sub_pd(x, _mm256_mul_pd(t, _mm256_set1_pd(kLn2Hi)));
    __m256d lo = _mm256_mul_pd(t, _mm256_set1_pd(kLn2Lo));
    __m256d r = _mm256_sub_pd(hi, lo);
    __m256d z = _mm256_mul_pd(r, r);
    __m256d c = _mm256_sub_pd(
        r,
        _mm256_mul_pd(
            z,
            _mm256_add_pd(
                _mm256_set1_pd(kP1),
                _mm256_mul_pd(
                    z,
                    _mm256_add_pd(
                        _mm256_set1_pd(kP2),
                        _mm256_mul_pd(
                            z, _mm256_add_pd(_mm256_set1_pd(kP3),
                                             _mm256_mul_pd(z, _mm256_add_pd(_mm256_set1_pd(kP4),
                                                                            _mm256_mul_pd(
                                                                                z, _mm256_set1_pd(
                                                                                       kP5)))))))))));
    __m256d y = _mm256_sub_pd(
        one,
        _mm256_sub_pd(_mm256_sub_pd(lo, _mm256_div_pd(_mm256_mul_pd(r, c), _mm256_sub_pd(two, c))),
                      hi));
    __m256d tiny = _mm256_cmp_pd(absx, _mm256_set1_pd(0x1p-28), _CMP_LT_OQ);
    y = _mm256_blendv_pd(y, _mm256_add_pd(one, x), tiny);

    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i ybits = _mm256_add_epi64(_mm256_castpd_si256(y), _mm256_slli_epi64(k64, 52));
    return _mm256_castsi256_pd(ybits);
}

inline __m256d pow01_4(__m256d base, double lam) {
    if (lam == 0.0) return _mm256_set1_pd(1.0);
    if (vmath::pow01_uses_int_path(lam)) {
        int n = static_cast<int>(lam);
        __m256d result = _mm256_set1_pd(1.0);
        __m256d b = base;
        while (n > 0) {
            if (n & 1) result = _mm256_mul_pd(result, b);
            n >>= 1;
            if (n > 0) b = _mm256_mul_pd(b, b);
        }
        return result;
    }
    return exp4(_mm256_mul_pd(_mm256_set1_pd(lam), log4(base)));
}

// Reduction helpers: accumulate whole blocks in a vector register, route the
// tail into lane (i & 3), combine as (l0 + l1) + (l2 + l3).

inline double combine_sum(__m256d acc, const double* x, std::size_t i, std::size_t n) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i & 3] += x[i];
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double max4(const double* x, std::size_t n) {
    __m256d acc = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double m[4];
    _mm256_store_pd(m, acc);
    for (; i < n; ++i) {
        double& lane = m[i & 3];
        lane = (lane > x[i]) ? lane : x[i];
    }
    double a = (m[0] > m[1]) ? m[0] : m[1];
    double b = (m[2] > m[3]) ? m[2] : m[3];
    return (a > b) ? a : b;
}

double sum_impl(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    return combine_sum(acc, x, i, n);
}

double dot_impl(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i & 3] += a[i] * b[i];
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void softmax_impl(const double* logits, std::size_t n, double inv_temp, double* out) {
    const __m256d it = _mm256_set1_pd(inv_temp);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(logits + i), it));
    for (; i < n; ++i) out[i] = logits[i] * inv_temp;
    double m = max4(out, n);
    const __m256d vm = _mm256_set1_pd(m);
    for (i = 0; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, exp4(_mm256_sub_pd(_mm256_loadu_pd(out + i), vm)));
    for (; i < n; ++i) out[i] = vmath::exp(out[i] - m);
    double s = sum_impl(out, n);
    const __m256d vs = _mm256_set1_pd(s);
    for (i = 0; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(out + i), vs));
    for (; i < n; ++i) out[i] = out[i] / s;
}

void log_softmax_impl(const double* logits, std::size_t n, double inv_temp, double* out) {
    const __m256d it = _mm256_set1_pd(inv_temp);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(logits + i), it));
    for (; i < n; ++i) out[i] = logits[i] * inv_temp;
    double m = max4(out, n);
    const __m256d vm = _mm256_set1_pd(m);
    __m256d acc = _mm256_setzero_pd();
    for (i = 0; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, exp4(_mm256_sub_pd(_mm256_loadu_pd(out + i), vm)));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i & 3] += vmath::exp(out[i] - m);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    double lse = m + vmath::log(s);
    const __m256d vlse = _mm256_set1_pd(lse);
    for (i = 0; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(out + i), vlse));
    for (; i < n; ++i) out[i] = out[i] - lse;
}

double entropy_impl(const double* p, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc = zero;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(p + i);
        __m256d term = _mm256_mul_pd(v, log4(v));
        __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        acc = _mm256_add_pd(acc, _mm256_blendv_pd(zero, term, mask));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i & 3] += (p[i] > 0.0) ? p[i] * vmath::log(p[i]) : 0.0;
    return -((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]));
}

void log_array_impl(const double* x, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, log4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = vmath::log(x[i]);
}

void exp_array_impl(const double* x, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = vmath::exp(x[i]);
}

void log_ratio_smoothed_impl(const double* p, const double* q, std::size_t n, double eps,
                             double* out) {
    const __m256d ve = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d num = _mm256_add_pd(_mm256_loadu_pd(p + i), ve);
        __m256d den = _mm256_add_pd(_mm256_loadu_pd(q + i), ve);
        _mm256_storeu_pd(out + i, log4(_mm256_div_pd(num, den)));
    }
    for (; i < n; ++i) out[i] = vmath::log((p[i] + eps) / (q[i] + eps));
}

void gate_array_impl(const double* p, std::size_t n, double lambda, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, pow01_4(_mm256_sub_pd(one, _mm256_loadu_pd(p + i)), lambda));
    for (; i < n; ++i) out[i] = vmath::pow01(1.0 - p[i], lambda);
}

double coverage_impl(const double* p, std::size_t n, double lambda) {
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(p + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, pow01_4(_mm256_sub_pd(one, v), lambda)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i & 3] += p[i] * vmath::pow01(1.0 - p[i], lambda);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

const KernelOps* avx2_ops() {
    if (!__builtin_cpu_supports("avx2")) return nullptr;
    static const KernelOps ops = {
        softmax_impl,   log_softmax_impl,       entropy_impl,    sum_impl,      dot_impl,
        log_array_impl, exp_array_impl,         log_ratio_smoothed_impl,        gate_array_impl,
        coverage_impl,
    };
    return &ops;
}

}  // namespace tcer::kernels

#else  // non-x86 build: no AVX2 variant

namespace tcer::kernels {
const KernelOps* avx2_ops() { return nullptr; }
}  // namespace tcer::kernels

#endif
