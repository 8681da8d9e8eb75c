#include "tcer/reward.hpp"

#include <cmath>

#include "tcer/common.hpp"
#include "tcer/kernels.hpp"
#include "tcer/serde.hpp"
#include "tcer/vmath.hpp"

namespace tcer::reward {

const char* variant_name(Variant v) { return v == Variant::endor ? "endor" : "tcer"; }

Variant variant_from_name(const std::string& name) {
    if (name == "endor") return Variant::endor;
    if (name == "tcer") return Variant::tcer;
    throw UsageError("unknown reward variant: " + name);
}

void RewardConfig::validate() const {
    if (!(epsilon > 0.0)) throw UsageError("reward epsilon must be > 0");
    if (!(lambda > 0.0)) throw UsageError("reward lambda must be > 0");
    if (!(k >= 0.0)) throw UsageError("reward k must be >= 0");
}

double endor_reward(double p) {
    if (!(p > 0.0) || p > 1.0)
        throw DataError("endor_reward: probability out of (0, 1]: " + serde::g17(p));
    return vmath::log(p);
}

double info_gain(double p, double q, double eps) {
    return vmath::log((p + eps) / (q + eps));
}

double gate_weight(double p, double lambda) { return vmath::pow01(1.0 - p, lambda); }

double correction_term(double p, double q, double lambda, double eps) {
    return gate_weight(p, lambda) * info_gain(p, q, eps);
}

double correction_derivative(double p, double q, double lambda, double eps) {
    if (p < 0.0 || p > 1.0) throw DataError("correction_derivative: p out of [0, 1]");
    if (lambda < 1.0 && p == 1.0)
        throw DataError("correction_derivative diverges at p = 1 for lambda < 1");
    double ig = info_gain(p, q, eps);
    double first = -lambda * vmath::pow01(1.0 - p, lambda - 1.0) * ig;
    double second = vmath::pow01(1.0 - p, lambda) / (p + eps);
    return first + second;
}

double tcer_reward(double p, double q, const RewardConfig& cfg) {
    double e = endor_reward(p);
    double c = gate_weight(p, cfg.lambda) * info_gain(p, q, cfg.epsilon);
    return e + cfg.k * c;
}

std::vector<double> TokenRewardTrace::column(Variant v) const {
    std::vector<double> out(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i)
        out[i] = (v == Variant::endor) ? steps[i].endor : steps[i].tcer;
    return out;
}

TokenRewardTrace build_trace(std::span<const int> tokens, std::span<const double> p,
                             std::span<const double> q, const RewardConfig& cfg) {
    cfg.validate();
    std::size_t n = tokens.size();
    if (p.size() != n || q.size() != n)
        throw DataError("build_trace: tokens/p/q lengths differ");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(p[i] > 0.0) || p[i] > 1.0)
            throw DataError("build_trace: p out of (0, 1] at index " + std::to_string(i));
        if (!(q[i] >= 0.0) || q[i] > 1.0)
            throw DataError("build_trace: q out of [0, 1] at index " + std::to_string(i));
    }
    std::vector<double> endor(n), phi(n), gate(n);
    kernels::log_array(p, endor);
    kernels::log_ratio_smoothed(p, q, cfg.epsilon, phi);
    kernels::gate_array(p, cfg.lambda, gate);

    TokenRewardTrace trace;
    trace.steps.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        TokenRewardStep& s = trace.steps[i];
        s.token = tokens[i];
        s.p = p[i];
        s.q = q[i];
        s.endor = endor[i];
        s.phi = phi[i];
        s.gate = gate[i];
        s.tcer = endor[i] + cfg.k * (gate[i] * phi[i]);
    }
    return trace;
}

double sequence_reward(const TokenRewardTrace& trace, const RewardConfig& cfg) {
    if (trace.steps.empty()) throw DataError("sequence_reward: empty trace");
    std::vector<double> col = trace.column(cfg.variant);
    return kernels::sum(col) / static_cast<double>(col.size());
}

SentenceAggregates sentence_aggregate(const TokenRewardTrace& trace,
                                      std::span<const SentenceSpan> ranges) {
    SentenceAggregates out;
    std::size_t prev_end = 0;
    bool first = true;
    for (const SentenceSpan& r : ranges) {
        if (r.begin >= r.end) throw DataError("sentence_aggregate: empty range");
        if (!first && r.begin < prev_end)
            throw DataError("sentence_aggregate: ranges overlap or are out of order");
        if (r.end > trace.size()) throw DataError("sentence_aggregate: range out of bounds");
        first = false;
        prev_end = r.end;
        std::size_t len = r.end - r.begin;
        double se = 0.0, st = 0.0;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            se += trace.steps[i].endor;
            st += trace.steps[i].tcer;
        }
        out.endor.push_back(se / static_cast<double>(len));
        out.tcer.push_back(st / static_cast<double>(len));
    }
    return out;
}

double coverage(const TokenDist& dist, double lambda) {
    return kernels::coverage(dist.probs, lambda);
}

TokenDist one_step_optimal_policy(const TokenDist& dist) {
    if (dist.probs.empty()) throw DataError("one_step_optimal_policy: empty distribution");
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.probs.size(); ++i)
        if (dist.probs[i] > dist.probs[best]) best = i;
    TokenDist out;
    out.probs.assign(dist.probs.size(), 0.0);
    out.probs[best] = 1.0;
    return out;
}

DiversityGapReport diversity_gap_check(const TokenRewardTrace& det_trace,
                                       const TokenRewardTrace& diverse_trace,
                                       const RewardConfig& cfg) {
    RewardConfig tcer_cfg = cfg;
    tcer_cfg.variant = Variant::tcer;
    DiversityGapReport rep;
    rep.r_det = sequence_reward(det_trace, tcer_cfg);
    rep.r_diverse = sequence_reward(diverse_trace, tcer_cfg);
    rep.gap = rep.r_diverse - rep.r_det;
    return rep;
}

}  // namespace tcer::reward
