// Scalar reference transcendentals. kernels_avx2.cpp mirrors these operation
// sequences lane-for-lane; any edit here must be replayed there or the
// bit-equality tests will fail.

#include "tcer/vmath.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace tcer::vmath {

namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;

// log: coefficients of the atanh-form polynomial on [sqrt(2)/2, sqrt(2)).
constexpr double kLg1 = 6.666666666666735130e-01;
constexpr double kLg2 = 3.999999999940941908e-01;
constexpr double kLg3 = 2.857142874366239149e-01;
constexpr double kLg4 = 2.222219843214978396e-01;
constexpr double kLg5 = 1.818357216161805012e-01;
constexpr double kLg6 = 1.531383769920937332e-01;
constexpr double kLg7 = 1.479819860511658591e-01;

// exp: degree-5 tail on |r| <= ln2/2.
constexpr double kP1 = 1.66666666666666019037e-01;
constexpr double kP2 = -2.77777777770155933842e-03;
constexpr double kP3 = 6.61375632143793436117e-05;
constexpr double kP4 = -1.65339022054652515390e-06;
constexpr double kP5 = 4.13813679705723846039e-08;

constexpr double kExpOverflow = 7.09782712893383973096e+02;
constexpr double kExpUnderflow = -7.45133219101941108420e+02;

}  // namespace

double log(double x) {
    std::uint64_t ix = std::bit_cast<std::uint64_t>(x);
    int k = 0;
    if (ix < 0x0010000000000000ULL || (ix >> 63) != 0) {
        if ((ix << 1) == 0) return -std::numeric_limits<double>::infinity();  // +-0
        if ((ix >> 63) != 0) return std::numeric_limits<double>::quiet_NaN();  // x < 0
        // positive subnormal: renormalize
        k -= 54;
        x *= 0x1p54;
        ix = std::bit_cast<std::uint64_t>(x);
    } else if (ix >= 0x7ff0000000000000ULL) {
        return x;  // +inf or NaN
    }

    // Reduce x = 2^k * xr with xr in [sqrt(2)/2, sqrt(2)). The threshold test
    // runs on the high 32 bits only, as the AVX2 twin does.
    k += static_cast<int>(ix >> 52) - 1023;
    std::uint64_t mant_hi = (ix >> 32) & 0xfffffULL;
    std::uint64_t i = (mant_hi + 0x95f64ULL) & 0x100000ULL;
    std::uint64_t bits = (ix & 0x00000000ffffffffULL) | ((mant_hi | (i ^ 0x3ff00000ULL)) << 32);
    double xr = std::bit_cast<double>(bits);
    k += static_cast<int>(i >> 20);

    double f = xr - 1.0;
    double hf = 0.5 * f;
    double hfsq = hf * f;
    double s = f / (2.0 + f);
    double z = s * s;
    double w = z * z;
    double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
    double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
    double r = t2 + t1;
    double dk = static_cast<double>(k);
    double v1 = s * (hfsq + r);
    double v2 = dk * kLn2Lo;
    double v3 = hfsq - (v1 + v2);
    double v4 = v3 - f;
    return dk * kLn2Hi - v4;
}

double exp(double x) {
    if (x != x) return x;
    if (x > kExpOverflow) return std::numeric_limits<double>::infinity();
    if (x < kExpUnderflow) return 0.0;

    std::uint64_t sign = std::bit_cast<std::uint64_t>(x) & 0x8000000000000000ULL;
    double half_signed = std::bit_cast<double>(std::bit_cast<std::uint64_t>(0.5) | sign);
    int k = static_cast<int>(kInvLn2 * x + half_signed);  // truncation => round half away
    double t = static_cast<double>(k);
    double hi = x - t * kLn2Hi;
    double lo = t * kLn2Lo;
    double r = hi - lo;
    double z = r * r;
    double c = r - z * (kP1 + z * (kP2 + z * (kP3 + z * (kP4 + z * kP5))));
    double y = 1.0 - ((lo - (r * c) / (2.0 - c)) - hi);
    double absx = x < 0.0 ? -x : x;
    if (absx < 0x1p-28) y = 1.0 + x;

    // Scale by 2^k through the exponent field; y is near 1 so the field
    // stays in range whenever k >= -1021. Deeper underflow goes in two steps.
    if (k >= -1021) {
        return std::bit_cast<double>(std::bit_cast<std::uint64_t>(y) +
                                     (static_cast<std::uint64_t>(static_cast<std::int64_t>(k)) << 52));
    }
    double y1 = std::bit_cast<double>(std::bit_cast<std::uint64_t>(y) +
                                      (static_cast<std::uint64_t>(static_cast<std::int64_t>(k + 1000)) << 52));
    return y1 * 0x1p-1000;
}

bool pow01_uses_int_path(double lam) {
    return lam >= 1.0 && lam <= 64.0 && lam == static_cast<double>(static_cast<int>(lam));
}

double pow01(double base, double lam) {
    if (lam == 0.0) return 1.0;
    if (pow01_uses_int_path(lam)) {
        int n = static_cast<int>(lam);
        double result = 1.0;
        double b = base;
        while (n > 0) {
            if (n & 1) result = result * b;
            n >>= 1;
            if (n > 0) b = b * b;
        }
        return result;
    }
    return exp(lam * log(base));
}

}  // namespace tcer::vmath
