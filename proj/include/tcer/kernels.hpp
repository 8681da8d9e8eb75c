#pragma once

// Array kernels behind the whole numeric pipeline: softmax / log-softmax,
// entropy, the reward-column maps (log p, smoothed log-ratio, gate), the
// coverage sum, and the blocked reductions.
//
// Two variants exist: a scalar reference and an AVX2 implementation picked
// at startup when the CPU supports it. They are bit-identical by
// construction — both run the same operation sequence per element, share
// the vmath transcendentals, and reduce through four fixed lanes combined
// as (l0+l1)+(l2+l3) — and tests/test_kernels.cpp holds them to that.

#include <cstddef>
#include <span>

namespace tcer::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_available(Backend b);
void set_backend(Backend b);  // throws UsageError if unavailable
const char* backend_name(Backend b);

// out[i] = softmax(logits * inv_temp)[i]; strictly positive, sums to 1.
void softmax(std::span<const double> logits, double inv_temp, std::span<double> out);

// out[i] = log softmax(logits * inv_temp)[i], via log-sum-exp.
void log_softmax(std::span<const double> logits, double inv_temp, std::span<double> out);

// -sum p_i ln p_i with 0 ln 0 = 0.
double entropy(std::span<const double> probs);

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

void log_array(std::span<const double> x, std::span<double> out);
void exp_array(std::span<const double> x, std::span<double> out);

// out[i] = ln((p[i] + eps) / (q[i] + eps))
void log_ratio_smoothed(std::span<const double> p, std::span<const double> q, double eps,
                        std::span<double> out);

// out[i] = (1 - p[i])^lambda
void gate_array(std::span<const double> p, double lambda, std::span<double> out);

// sum_i p_i (1 - p_i)^lambda
double coverage(std::span<const double> probs, double lambda);

}  // namespace tcer::kernels
