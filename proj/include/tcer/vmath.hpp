#pragma once

// Natural log / exp used by every kernel variant.
//
// The point of owning these instead of calling libm: the scalar and AVX2
// kernels must produce bit-identical results, which requires one shared
// operation sequence for the transcendentals. Both functions follow the
// classic fdlibm reductions (log via s = f/(2+f) and an odd polynomial in
// s^2; exp via k = round(x/ln2) and a degree-5 rational tail) and stay
// within ~1 ulp of correctly rounded over the full double range. Accuracy
// against libm is asserted by tests/test_vmath.cpp.

#include <cstdint>

namespace tcer::vmath {

// Natural logarithm. log(0) = -inf, log(x<0) = NaN, log(inf) = inf.
double log(double x);

// Natural exponential. Overflows to +inf past 709.78..., underflows to 0.
double exp(double x);

// base^lam for base in [0, 1]. Integral lam in [1, 64] uses exact binary
// exponentiation (so e.g. 0.5^2 == 0.25 exactly); lam == 0 returns 1;
// otherwise exp(lam * log(base)). pow01(0, lam) == 0 and pow01(1, lam) == 1
// for lam > 0; negative lam is only meaningful for base > 0.
double pow01(double base, double lam);

// True when lam takes the exact-multiplication path in pow01.
bool pow01_uses_int_path(double lam);

}  // namespace tcer::vmath
