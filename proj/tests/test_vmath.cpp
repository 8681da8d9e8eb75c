#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tcer/vmath.hpp"

namespace vm = tcer::vmath;

TEST_CASE("log matches libm within 4 ulp across magnitudes") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> expo(-300.0, 300.0);
    std::int64_t worst = 0;
    for (int i = 0; i < 200000; ++i) {
        double x = std::exp2(expo(gen));
        double got = vm::log(x);
        double want = std::log(x);
        worst = std::max(worst, oracle::ulp_diff(got, want));
    }
    // probabilities: the range the kernels actually live in
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 200000; ++i) {
        double x = u01(gen);
        if (x == 0.0) continue;
        worst = std::max(worst, oracle::ulp_diff(vm::log(x), std::log(x)));
    }
    // near 1, where cancellation lives
    std::uniform_real_distribution<double> near1(-1e-3, 1e-3);
    for (int i = 0; i < 200000; ++i) {
        double x = 1.0 + near1(gen);
        worst = std::max(worst, oracle::ulp_diff(vm::log(x), std::log(x)));
    }
    CHECK(worst <= 4);
}

TEST_CASE("log special values") {
    CHECK(vm::log(1.0) == 0.0);
    CHECK(vm::log(0.0) == -std::numeric_limits<double>::infinity());
    CHECK(vm::log(-0.0) == -std::numeric_limits<double>::infinity());
    CHECK(std::isnan(vm::log(-1.0)));
    CHECK(vm::log(std::numeric_limits<double>::infinity()) ==
          std::numeric_limits<double>::infinity());
    CHECK(std::isnan(vm::log(std::numeric_limits<double>::quiet_NaN())));
    // subnormals
    double sub = std::numeric_limits<double>::denorm_min() * 37;
    CHECK(oracle::ulp_diff(vm::log(sub), std::log(sub)) <= 4);
    double minn = std::numeric_limits<double>::min();
    CHECK(oracle::ulp_diff(vm::log(minn), std::log(minn)) <= 4);
}

TEST_CASE("exp matches libm within 4 ulp across the finite range") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> wide(-745.0, 709.0);
    std::int64_t worst = 0;
    for (int i = 0; i < 400000; ++i) {
        double x = wide(gen);
        double got = vm::exp(x);
        double want = std::exp(x);
        if (want == 0.0 || !std::isfinite(want)) {
            CHECK(got == want);
            continue;
        }
        worst = std::max(worst, oracle::ulp_diff(got, want));
    }
    std::uniform_real_distribution<double> small(-30.0, 1.0);
    for (int i = 0; i < 200000; ++i) {
        double x = small(gen);
        worst = std::max(worst, oracle::ulp_diff(vm::exp(x), std::exp(x)));
    }
    CHECK(worst <= 4);
}

TEST_CASE("exp special values and thresholds") {
    CHECK(vm::exp(0.0) == 1.0);
    CHECK(vm::exp(-std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(vm::exp(std::numeric_limits<double>::infinity()) ==
          std::numeric_limits<double>::infinity());
    CHECK(std::isnan(vm::exp(std::numeric_limits<double>::quiet_NaN())));
    CHECK(vm::exp(710.0) == std::numeric_limits<double>::infinity());
    CHECK(vm::exp(-746.0) == 0.0);
    CHECK(vm::exp(1e-30) == 1.0 + 1e-30);
    // deep underflow still produces the right subnormal ballpark
    double d = vm::exp(-744.0);
    CHECK(d > 0.0);
    CHECK(oracle::ulp_diff(d, std::exp(-744.0)) <= 2000);  // subnormal: ulp is coarse
}

TEST_CASE("exp(log(x)) round trip") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> u(1e-12, 1.0);
    for (int i = 0; i < 100000; ++i) {
        double x = u(gen);
        CHECK(oracle::rel_err(vm::exp(vm::log(x)), x) <= 1e-15);
    }
}

TEST_CASE("pow01 exactness and accuracy") {
    CHECK(vm::pow01(0.5, 2.0) == 0.25);
    CHECK(vm::pow01(0.5, 3.0) == 0.125);
    CHECK(vm::pow01(0.0, 2.0) == 0.0);
    CHECK(vm::pow01(0.0, 1.5) == 0.0);
    CHECK(vm::pow01(1.0, 7.0) == 1.0);
    CHECK(vm::pow01(1.0, 0.7) == 1.0);
    CHECK(vm::pow01(0.37, 1.0) == 0.37);
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> base(0.0, 1.0);
    std::uniform_real_distribution<double> lam(0.1, 8.0);
    for (int i = 0; i < 50000; ++i) {
        double b = base(gen);
        double l = lam(gen);
        double want = std::pow(b, l);
        CHECK(oracle::rel_err(vm::pow01(b, l), want) <= 1e-13);
    }
}
