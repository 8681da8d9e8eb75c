#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tcer/kernels.hpp"

namespace k = tcer::kernels;

namespace {

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

template <typename Fn>
auto with_backend(k::Backend b, Fn&& fn) {
    k::Backend prev = k::active_backend();
    k::set_backend(b);
    auto result = fn();
    k::set_backend(prev);
    return result;
}

std::vector<std::size_t> test_sizes() { return {1, 2, 3, 4, 5, 7, 8, 9, 16, 33, 100, 1003}; }

}  // namespace

TEST_CASE("scalar and avx2 kernels are bit-identical") {
    if (!k::backend_available(k::Backend::avx2)) {
        MESSAGE("avx2 not available on this CPU; equivalence not exercised");
        return;
    }
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> logit(-30.0, 30.0);

    for (std::size_t n : test_sizes()) {
        std::vector<double> logits(n), p(n), q(n);
        for (std::size_t i = 0; i < n; ++i) {
            logits[i] = logit(gen);
            p[i] = u01(gen);
            q[i] = u01(gen);
        }
        // seed edge values into the mix
        if (n >= 4) {
            p[0] = 0.0;
            p[1] = 1.0;
            q[2] = 0.0;
            q[3] = 1.0;
        }

        for (double lambda : {1.0, 2.0, 3.0, 2.5}) {
            auto g_s = with_backend(k::Backend::scalar, [&] {
                std::vector<double> out(n);
                k::gate_array(p, lambda, out);
                return out;
            });
            auto g_v = with_backend(k::Backend::avx2, [&] {
                std::vector<double> out(n);
                k::gate_array(p, lambda, out);
                return out;
            });
            CHECK(bits_equal(g_s, g_v));

            double c_s = with_backend(k::Backend::scalar, [&] { return k::coverage(p, lambda); });
            double c_v = with_backend(k::Backend::avx2, [&] { return k::coverage(p, lambda); });
            CHECK(bits_equal(c_s, c_v));
        }

        for (double inv_temp : {1.0, 1.0 / 0.7, 2.0}) {
            auto sm_s = with_backend(k::Backend::scalar, [&] {
                std::vector<double> out(n);
                k::softmax(logits, inv_temp, out);
                return out;
            });
            auto sm_v = with_backend(k::Backend::avx2, [&] {
                std::vector<double> out(n);
                k::softmax(logits, inv_temp, out);
                return out;
            });
            CHECK(bits_equal(sm_s, sm_v));

            auto ls_s = with_backend(k::Backend::scalar, [&] {
                std::vector<double> out(n);
                k::log_softmax(logits, inv_temp, out);
                return out;
            });
            auto ls_v = with_backend(k::Backend::avx2, [&] {
                std::vector<double> out(n);
                k::log_softmax(logits, inv_temp, out);
                return out;
            });
            CHECK(bits_equal(ls_s, ls_v));
        }

        auto pair_each = [&](auto fn) {
            auto r_s = with_backend(k::Backend::scalar, fn);
            auto r_v = with_backend(k::Backend::avx2, fn);
            CHECK(bits_equal(r_s, r_v));
        };
        pair_each([&] {
            std::vector<double> out(n);
            k::log_array(p, out);
            return out;
        });
        pair_each([&] {
            std::vector<double> out(n);
            k::exp_array(logits, out);
            return out;
        });
        pair_each([&] {
            std::vector<double> out(n);
            k::log_ratio_smoothed(p, q, 1e-5, out);
            return out;
        });
        CHECK(bits_equal(with_backend(k::Backend::scalar, [&] { return k::entropy(p); }),
                         with_backend(k::Backend::avx2, [&] { return k::entropy(p); })));
        CHECK(bits_equal(with_backend(k::Backend::scalar, [&] { return k::sum(p); }),
                         with_backend(k::Backend::avx2, [&] { return k::sum(p); })));
        CHECK(bits_equal(with_backend(k::Backend::scalar, [&] { return k::dot(p, q); }),
                         with_backend(k::Backend::avx2, [&] { return k::dot(p, q); })));
    }
}

TEST_CASE("softmax matches the long-double oracle") {
    std::mt19937_64 gen(22);
    std::uniform_real_distribution<double> logit(-20.0, 20.0);
    for (std::size_t n : {2u, 4u, 40u, 257u}) {
        std::vector<double> logits(n);
        for (auto& v : logits) v = logit(gen);
        std::vector<double> got(n);
        k::softmax(logits, 1.0, got);
        auto want = oracle::softmax_ld(logits, 1.0);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(oracle::rel_err(got[i], want[i]) <= 1e-13);
            CHECK(got[i] > 0.0);
            s += got[i];
        }
        CHECK(std::fabs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("softmax of constant logits is uniform") {
    std::vector<double> logits(4, 0.0);
    std::vector<double> out(4);
    k::softmax(logits, 1.0, out);
    for (double v : out) CHECK(v == 0.25);
    // temperature cannot break the symmetry
    std::vector<double> l2(2, 0.0), o2(2);
    k::softmax(l2, 2.0, o2);
    CHECK(o2[0] == 0.5);
    CHECK(o2[1] == 0.5);
}

TEST_CASE("log_softmax agrees with softmax and the oracle") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> logit(-10.0, 10.0);
    std::vector<double> logits(37);
    for (auto& v : logits) v = logit(gen);
    std::vector<double> lsm(logits.size()), sm(logits.size());
    k::log_softmax(logits, 1.0, lsm);
    k::softmax(logits, 1.0, sm);
    auto want = oracle::log_softmax_ld(logits, 1.0);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        CHECK(oracle::rel_err(lsm[i], want[i]) <= 1e-12);
        CHECK(oracle::rel_err(std::exp(lsm[i]), sm[i]) <= 1e-12);
        CHECK(lsm[i] <= 0.0);
    }
}

TEST_CASE("entropy values and bounds") {
    std::vector<double> uniform4(4, 0.25);
    CHECK(oracle::rel_err(k::entropy(uniform4), 1.3862943611198906) <= 1e-15);
    std::vector<double> delta = {0.0, 1.0, 0.0};
    CHECK(k::entropy(delta) == 0.0);
    std::vector<double> mixed = {0.5, 0.25, 0.25};
    CHECK(oracle::rel_err(k::entropy(mixed), 1.0397207708399179) <= 1e-15);

    std::mt19937_64 gen(24);
    for (int rep = 0; rep < 200; ++rep) {
        auto p = oracle::random_dist(gen, 1 + static_cast<std::size_t>(gen() % 64));
        double h = k::entropy(p);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(p.size())) + 1e-12);
        CHECK(oracle::rel_err(h, oracle::entropy_ld(p)) <= 1e-12);
    }
}

TEST_CASE("sum and dot match long-double references") {
    std::mt19937_64 gen(25);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : test_sizes()) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = u(gen);
            b[i] = u(gen);
        }
        CHECK(std::fabs(k::sum(a) - oracle::sum_ld(a)) <= 1e-12);
        CHECK(std::fabs(k::dot(a, b) - oracle::dot_ld(a, b)) <= 1e-12);
    }
}

TEST_CASE("gate and log-ratio fixed points") {
    std::vector<double> p = {1.0, 0.0, 0.5};
    std::vector<double> out(3);
    k::gate_array(p, 2.0, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 1.0);
    CHECK(out[2] == 0.25);

    std::vector<double> q = {0.3, 0.3, 0.3};
    std::vector<double> same = {0.3, 0.3, 0.3};
    k::log_ratio_smoothed(same, q, 1e-5, out);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("coverage fixed points") {
    std::vector<double> det = {1.0, 0.0, 0.0};
    CHECK(k::coverage(det, 2.0) == 0.0);
    std::vector<double> uniform2 = {0.5, 0.5};
    CHECK(k::coverage(uniform2, 1.0) == 0.5);
}
