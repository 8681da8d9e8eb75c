#pragma once

// Reference-augmented GRPO: sample a group of rollouts per prompt, score
// them (and the ground-truth reference) under the frozen specialist /
// generalist pair, normalize advantages against the augmented group, and
// ascend the clipped surrogate with a KL penalty to the RL-start policy.

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <vector>

#include "tcer/policy.hpp"
#include "tcer/reward.hpp"
#include "tcer/rng.hpp"
#include "tcer/runlog.hpp"

namespace tcer::grpo {

struct GrpoConfig {
    int group_size = 8;           // G sampled rollouts per prompt
    double clip_eps = 0.2;        // ratio clip half-width
    double kl_beta = 0.001;       // KL penalty coefficient
    double learning_rate = 0.5;
    int steps = 100;
    reward::RewardConfig reward;
    double temperature = 0.7;     // sampling only; rewards always use 1
    int max_len = 32;
    std::uint64_t seed = 0;
    // When true the reference enters the loss as an off-policy sample with
    // the specialist as behavior policy; by default it only shapes the
    // advantage statistics.
    bool train_on_reference = false;
    int prompts_per_step = 4;
    int inner_epochs = 1;         // >1 re-walks the clipped surrogate per batch

    void validate() const;
    static GrpoConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ScoredSample {
    TokenSeq tokens;                    // generated tokens; reference keeps its EOS
    reward::TokenRewardTrace trace;     // (p, q) and reward columns under pi_s / pi_b
    std::vector<double> old_log_probs;  // behavior log-probs, empty when no gradient flows
    double reward = 0.0;                // sequence reward under the active variant
};

struct RolloutGroup {
    TokenSeq prompt;                     // no trailing EOS
    std::vector<ScoredSample> rollouts;  // size G
    ScoredSample reference;
    std::vector<double> rewards;     // size G+1, reference last
    std::vector<double> advantages;  // size G+1, zero-mean unless degenerate

    // Diagnostics over the sampled rollouts' visited contexts.
    double actor_entropy_sum = 0.0;  // actor token entropy at temperature 1
    double coverage_sum = 0.0;       // specialist coverage S(s)
    std::size_t generated_tokens = 0;
};

// (R_i - mean) / population sigma over the augmented set; all zeros when
// sigma < 1e-8 (a degenerate group carries no learning signal).
std::vector<double> group_advantage(std::span<const double> rewards);

RolloutGroup collect_group(const Policy& actor, const Policy& pi_s, const Policy& pi_b,
                           const TokenSeq& prompt, const TokenSeq& reference,
                           const GrpoConfig& cfg, rng::Stream stream);

struct LossDiagnostics {
    double ratio_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t clipped = 0;
    std::size_t tokens = 0;

    double mean_ratio() const { return tokens ? ratio_sum / static_cast<double>(tokens) : 0.0; }
    double clip_fraction() const {
        return tokens ? static_cast<double>(clipped) / static_cast<double>(tokens) : 0.0;
    }
    double kl_estimate() const { return tokens ? kl_sum / static_cast<double>(tokens) : 0.0; }
};

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;
    LossDiagnostics diag;
};

// Negative clipped-surrogate objective with per-token KL penalty
// (ratio - 1 - log ratio against ref_policy), averaged over all tokens of
// the gradient-carrying samples. The gradient is exact for this loss.
LossResult grpo_loss(const Policy& actor, const Policy& ref_policy, const RolloutGroup& group,
                     const GrpoConfig& cfg);

struct PromptSet {
    std::vector<TokenSeq> prompts;     // EOS-free
    std::vector<TokenSeq> references;  // EOS-terminated

    std::size_t size() const { return prompts.size(); }
};

struct TrainResult {
    Policy actor;
    RunLog log;
};

// `steps` iterations of collect -> advantage -> one (or inner_epochs)
// ascent step(s). pi_s and pi_b stay frozen; the KL anchor is actor_init.
// Bit-identical across thread counts and reruns with equal seeds.
TrainResult train(const Policy& actor_init, const Policy& pi_s, const Policy& pi_b,
                  const PromptSet& data, const GrpoConfig& cfg, int threads = 1);

}  // namespace tcer::grpo
