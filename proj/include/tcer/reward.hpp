#pragma once

// The reward kernel: the endogenous log-probability reward, the smoothed
// information-gain log-ratio, the (1-p)^lambda gate, the gated correction
// and its closed-form derivative, TCER, sequence/sentence aggregation,
// context coverage, and the one-step optimal policy.
//
// Scalar entry points and the array trace builder share the vmath
// transcendentals and composition order, so a value recomputed from a trace
// record reproduces the stored one bit-for-bit.

#include <span>
#include <string>
#include <vector>

#include "tcer/policy.hpp"

namespace tcer::reward {

enum class Variant { endor, tcer };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct RewardConfig {
    Variant variant = Variant::tcer;
    double k = 3.0;        // correction scale; k = 0 reduces tcer to endor exactly
    double lambda = 2.0;   // gating exponent
    double epsilon = 1e-5; // log-ratio smoothing

    void validate() const;  // throws UsageError on out-of-range fields
};

// ln p for p in (0, 1]. p <= 0 cannot come out of a softmax; it throws.
double endor_reward(double p);

// ln((p + eps)/(q + eps)); |result| <= ln((1 + eps)/eps) for p, q in [0, 1].
double info_gain(double p, double q, double eps);

// (1 - p)^lambda in [0, 1].
double gate_weight(double p, double lambda);

// gate_weight(p, lambda) * info_gain(p, q, eps).
double correction_term(double p, double q, double lambda, double eps);

// d/dp of correction_term: -lambda (1-p)^(lambda-1) ln((p+eps)/(q+eps))
//                          + (1-p)^lambda / (p+eps).
// Diverges when lambda < 1 at p = 1; that combination throws.
double correction_derivative(double p, double q, double lambda, double eps);

// endor_reward(p) + k * correction_term(p, q, lambda, eps).
double tcer_reward(double p, double q, const RewardConfig& cfg);

struct TokenRewardStep {
    int token = 0;
    double p = 0.0;     // specialist probability
    double q = 0.0;     // generalist probability
    double endor = 0.0;
    double phi = 0.0;
    double gate = 0.0;
    double tcer = 0.0;
};

struct TokenRewardTrace {
    std::vector<TokenRewardStep> steps;

    std::size_t size() const { return steps.size(); }
    std::vector<double> column(Variant v) const;
};

// Builds all reward columns from per-token (p, q) through the array kernels.
TokenRewardTrace build_trace(std::span<const int> tokens, std::span<const double> p,
                             std::span<const double> q, const RewardConfig& cfg);

// Length-normalized mean of the active variant's token rewards.
double sequence_reward(const TokenRewardTrace& trace, const RewardConfig& cfg);

// Half-open token index range [begin, end).
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct SentenceAggregates {
    std::vector<double> endor;  // per-sentence means
    std::vector<double> tcer;
};

// Ranges must be in order, non-overlapping, non-empty, and inside the trace.
SentenceAggregates sentence_aggregate(const TokenRewardTrace& trace,
                                      std::span<const SentenceSpan> ranges);

// S(s) = sum_v pi(v|s) (1 - pi(v|s))^lambda; 0 exactly iff deterministic.
double coverage(const TokenDist& dist, double lambda);

// Delta distribution at the argmax (ties -> lowest index): the maximizer of
// E_{y~pi}[ln pi_s(y)] over the simplex.
TokenDist one_step_optimal_policy(const TokenDist& dist);

struct DiversityGapReport {
    double r_det = 0.0;
    double r_diverse = 0.0;
    double gap = 0.0;  // r_diverse - r_det
};

// Mean TCER reward of each trace and their gap. The traces come from the
// deterministic-vs-diverse construction; conformance is the caller's business.
DiversityGapReport diversity_gap_check(const TokenRewardTrace& det_trace,
                                       const TokenRewardTrace& diverse_trace,
                                       const RewardConfig& cfg);

}  // namespace tcer::reward
