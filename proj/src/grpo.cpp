#include "tcer/grpo.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "tcer/common.hpp"
#include "tcer/kernels.hpp"
#include "tcer/vmath.hpp"

namespace tcer::grpo {

namespace {

void check_shared_vocab(const Policy& a, const Policy& b, const char* what) {
    if (!(a.vocab() == b.vocab()))
        throw DataError(std::string("policies must share a vocabulary: ") + what);
    if (!(a.shape() == b.shape()))
        throw DataError(std::string("policies must share a kind/shape: ") + what);
}

// Scores `tokens` as a continuation of `prompt`: reward trace under
// pi_s/pi_b, behavior log-probs, and the rollout diagnostics.
ScoredSample score_sample(const Policy* behavior, const Policy& pi_s, const Policy& pi_b,
                          const TokenSeq& prompt, TokenSeq tokens, const GrpoConfig& cfg,
                          double* entropy_sum, double* coverage_sum) {
    std::size_t n = tokens.size();
    std::size_t v = static_cast<std::size_t>(pi_s.vocab().size());
    std::vector<double> p(n), q(n);
    std::vector<double> old_lp;
    if (behavior) old_lp.resize(n);
    std::vector<double> lp_row(v), prob_row(v);
    for (std::size_t t = 0; t < n; ++t) {
        Context ctx{prompt.ids, std::span<const int>(tokens.ids.data(), t)};
        pi_s.log_probs_all(ctx, lp_row);
        p[t] = vmath::exp(lp_row[static_cast<std::size_t>(tokens.ids[t])]);
        if (coverage_sum) {
            kernels::exp_array(lp_row, prob_row);
            *coverage_sum += kernels::coverage(prob_row, cfg.reward.lambda);
        }
        pi_b.log_probs_all(ctx, lp_row);
        q[t] = vmath::exp(lp_row[static_cast<std::size_t>(tokens.ids[t])]);
        if (behavior) {
            behavior->log_probs_all(ctx, lp_row);
            old_lp[t] = lp_row[static_cast<std::size_t>(tokens.ids[t])];
            if (entropy_sum) {
                kernels::exp_array(lp_row, prob_row);
                *entropy_sum += kernels::entropy(prob_row);
            }
        }
    }
    ScoredSample s;
    s.trace = reward::build_trace(tokens.ids, p, q, cfg.reward);
    s.reward = reward::sequence_reward(s.trace, cfg.reward);
    s.tokens = std::move(tokens);
    s.old_log_probs = std::move(old_lp);
    return s;
}

}  // namespace

void GrpoConfig::validate() const {
    if (group_size < 1) throw UsageError("group_size must be >= 1");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw UsageError("clip_eps must be in (0, 1)");
    if (!(kl_beta >= 0.0)) throw UsageError("kl_beta must be >= 0");
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
    if (steps < 0) throw UsageError("steps must be >= 0");
    if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
    if (max_len < 1) throw UsageError("max_len must be >= 1");
    if (prompts_per_step < 1) throw UsageError("prompts_per_step must be >= 1");
    if (inner_epochs < 1) throw UsageError("inner_epochs must be >= 1");
    reward.validate();
}

GrpoConfig GrpoConfig::from_json(const nlohmann::json& j) {
    GrpoConfig cfg;
    if (!j.is_object()) throw DataError("grpo config must be a JSON object");
    if (j.contains("group_size")) cfg.group_size = j.at("group_size").get<int>();
    if (j.contains("clip_eps")) cfg.clip_eps = j.at("clip_eps").get<double>();
    if (j.contains("kl_beta")) cfg.kl_beta = j.at("kl_beta").get<double>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
    if (j.contains("temperature")) cfg.temperature = j.at("temperature").get<double>();
    if (j.contains("max_len")) cfg.max_len = j.at("max_len").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("train_on_reference"))
        cfg.train_on_reference = j.at("train_on_reference").get<bool>();
    if (j.contains("prompts_per_step")) cfg.prompts_per_step = j.at("prompts_per_step").get<int>();
    if (j.contains("inner_epochs")) cfg.inner_epochs = j.at("inner_epochs").get<int>();
    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        if (r.contains("variant"))
            cfg.reward.variant = reward::variant_from_name(r.at("variant").get<std::string>());
        if (r.contains("k")) cfg.reward.k = r.at("k").get<double>();
        if (r.contains("lambda")) cfg.reward.lambda = r.at("lambda").get<double>();
        if (r.contains("epsilon")) cfg.reward.epsilon = r.at("epsilon").get<double>();
    }
    return cfg;
}

nlohmann::json GrpoConfig::to_json() const {
    return nlohmann::json{
        {"group_size", group_size},
        {"clip_eps", clip_eps},
        {"kl_beta", kl_beta},
        {"learning_rate", learning_rate},
        {"steps", steps},
        {"temperature", temperature},
        {"max_len", max_len},
        {"seed", seed},
        {"train_on_reference", train_on_reference},
        {"prompts_per_step", prompts_per_step},
        {"inner_epochs", inner_epochs},
        {"reward",
         {{"variant", reward::variant_name(reward.variant)},
          {"k", reward.k},
          {"lambda", reward.lambda},
          {"epsilon", reward.epsilon}}},
    };
}

std::vector<double> group_advantage(std::span<const double> rewards) {
    if (rewards.size() < 2) throw DataError("group_advantage needs at least 2 rewards");
    double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    double sigma = std::sqrt(var / n);  // population
    std::vector<double> adv(rewards.size(), 0.0);
    if (sigma < 1e-8) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sigma;
    return adv;
}

RolloutGroup collect_group(const Policy& actor, const Policy& pi_s, const Policy& pi_b,
                           const TokenSeq& prompt, const TokenSeq& reference,
                           const GrpoConfig& cfg, rng::Stream stream) {
    cfg.validate();
    check_shared_vocab(actor, pi_s, "actor vs pi_s");
    check_shared_vocab(actor, pi_b, "actor vs pi_b");
    for (int id : prompt.ids)
        if (id == actor.vocab().eos_id()) throw DataError("prompt must not contain EOS");
    if (reference.ids.empty() || reference.ids.back() != actor.vocab().eos_id())
        throw DataError("reference must be EOS-terminated");

    RolloutGroup group;
    group.prompt = prompt;
    group.rollouts.reserve(static_cast<std::size_t>(cfg.group_size));
    for (int i = 0; i < cfg.group_size; ++i) {
        rng::Stream sub = stream.child(static_cast<std::uint64_t>(i));
        TokenSeq rollout = actor.sample_rollout(prompt.ids, cfg.temperature, cfg.max_len, sub);
        group.generated_tokens += rollout.size();
        group.rollouts.push_back(score_sample(&actor, pi_s, pi_b, prompt, std::move(rollout), cfg,
                                              &group.actor_entropy_sum, &group.coverage_sum));
    }
    const Policy* ref_behavior = cfg.train_on_reference ? &pi_s : nullptr;
    group.reference =
        score_sample(ref_behavior, pi_s, pi_b, prompt, reference, cfg, nullptr, nullptr);

    group.rewards.reserve(group.rollouts.size() + 1);
    for (const ScoredSample& s : group.rollouts) group.rewards.push_back(s.reward);
    group.rewards.push_back(group.reference.reward);
    group.advantages = group_advantage(group.rewards);
    return group;
}

LossResult grpo_loss(const Policy& actor, const Policy& ref_policy, const RolloutGroup& group,
                     const GrpoConfig& cfg) {
    if (group.advantages.size() != group.rollouts.size() + 1)
        throw DataError("grpo_loss: group advantages not populated");

    LossResult result;
    result.grad.assign(actor.param_count(), 0.0);
    double objective_sum = 0.0;

    std::size_t v = static_cast<std::size_t>(actor.vocab().size());
    std::vector<double> lp_row(v), ref_row(v);

    auto add_sample = [&](const ScoredSample& sample, double advantage) {
        for (std::size_t t = 0; t < sample.tokens.size(); ++t) {
            int y = sample.tokens.ids[t];
            Context ctx{group.prompt.ids, std::span<const int>(sample.tokens.ids.data(), t)};
            actor.log_probs_all(ctx, lp_row);
            double lp = lp_row[static_cast<std::size_t>(y)];
            double rho = vmath::exp(lp - sample.old_log_probs[t]);
            double unclipped = rho * advantage;
            double rho_c = std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
            double clipped = rho_c * advantage;
            double surrogate = std::min(unclipped, clipped);
            bool inside = rho > 1.0 - cfg.clip_eps && rho < 1.0 + cfg.clip_eps;
            double surr_coef =
                (unclipped <= clipped) ? rho * advantage : (inside ? rho * advantage : 0.0);

            ref_policy.log_probs_all(ctx, ref_row);
            double lref = ref_row[static_cast<std::size_t>(y)];
            double ratio_ref = vmath::exp(lref - lp);
            double kl = ratio_ref - 1.0 - (lref - lp);

            objective_sum += surrogate - cfg.kl_beta * kl;
            double coef = surr_coef - cfg.kl_beta * (1.0 - ratio_ref);
            if (coef != 0.0) actor.accumulate_log_prob_grad(ctx, y, coef, result.grad);

            result.diag.ratio_sum += rho;
            result.diag.kl_sum += kl;
            if (!inside) ++result.diag.clipped;
            ++result.diag.tokens;
        }
    };

    for (std::size_t i = 0; i < group.rollouts.size(); ++i)
        add_sample(group.rollouts[i], group.advantages[i]);
    if (cfg.train_on_reference) add_sample(group.reference, group.advantages.back());

    double n = static_cast<double>(result.diag.tokens);
    result.loss = -objective_sum / n;
    double scale = -1.0 / n;
    for (double& g : result.grad) g *= scale;
    return result;
}

TrainResult train(const Policy& actor_init, const Policy& pi_s, const Policy& pi_b,
                  const PromptSet& data, const GrpoConfig& cfg, int threads) {
    cfg.validate();
    check_shared_vocab(actor_init, pi_s, "actor vs pi_s");
    check_shared_vocab(actor_init, pi_b, "actor vs pi_b");
    if (data.prompts.size() != data.references.size() || data.prompts.empty())
        throw DataError("prompt set must pair every prompt with a reference");

    TrainResult out{actor_init, {}};
    Policy& actor = out.actor;
    const Policy ref_policy = actor_init;  // KL anchor: the RL-start policy

    rng::Stream root = rng::Stream::root(cfg.seed).child(0x9270);
    std::size_t n_prompts = data.prompts.size();
    std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.prompts_per_step),
                                              n_prompts);

    for (int step = 1; step <= cfg.steps; ++step) {
        rng::Stream step_stream = root.child(static_cast<std::uint64_t>(step));

        // Batch prompts: partial Fisher-Yates, no replacement within a step.
        rng::Stream pick = step_stream.child(0);
        std::vector<std::size_t> order(n_prompts);
        for (std::size_t i = 0; i < n_prompts; ++i) order[i] = i;
        for (std::size_t j = 0; j < batch; ++j) {
            std::size_t r = j + static_cast<std::size_t>(pick.next_u64() % (n_prompts - j));
            std::swap(order[j], order[r]);
        }

        std::vector<RolloutGroup> groups(batch);
        parallel_for(batch, threads, [&](std::size_t j) {
            groups[j] = collect_group(actor, pi_s, pi_b, data.prompts[order[j]],
                                      data.references[order[j]], cfg,
                                      step_stream.child(1 + static_cast<std::uint64_t>(j)));
        });

        LossDiagnostics step_diag;
        for (int pass = 0; pass < cfg.inner_epochs; ++pass) {
            std::vector<LossResult> losses(batch);
            parallel_for(batch, threads, [&](std::size_t j) {
                losses[j] = grpo_loss(actor, ref_policy, groups[j], cfg);
            });
            std::vector<double> grad(actor.param_count(), 0.0);
            for (const LossResult& lr : losses)
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lr.grad[i];
            double inv_groups = 1.0 / static_cast<double>(batch);
            for (std::size_t i = 0; i < grad.size(); ++i)
                actor.values()[i] -= cfg.learning_rate * (grad[i] * inv_groups);
            if (pass == 0) {
                for (const LossResult& lr : losses) {
                    step_diag.ratio_sum += lr.diag.ratio_sum;
                    step_diag.kl_sum += lr.diag.kl_sum;
                    step_diag.clipped += lr.diag.clipped;
                    step_diag.tokens += lr.diag.tokens;
                }
            }
        }

        double reward_sum = 0.0;
        std::size_t reward_count = 0;
        double entropy_sum = 0.0, coverage_sum = 0.0;
        std::size_t gen_tokens = 0;
        for (const RolloutGroup& g : groups) {
            for (const ScoredSample& s : g.rollouts) {
                reward_sum += s.reward;
                ++reward_count;
            }
            entropy_sum += g.actor_entropy_sum;
            coverage_sum += g.coverage_sum;
            gen_tokens += g.generated_tokens;
        }

        RunLogRecord rec;
        rec.step = step;
        rec.mean_reward = reward_sum / static_cast<double>(reward_count);
        rec.mean_entropy = entropy_sum / static_cast<double>(gen_tokens);
        rec.kl = step_diag.kl_estimate();
        rec.coverage = coverage_sum / static_cast<double>(gen_tokens);
        rec.clip_frac = step_diag.clip_fraction();
        out.log.records.push_back(rec);
    }
    return out;
}

}  // namespace tcer::grpo
