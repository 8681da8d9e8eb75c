#pragma once

// Softmax sequence policies: a tabular n-gram (exactly enumerable, the
// workhorse for oracle checks) and a linear neural policy (embedding ->
// mean pool -> logits) that exercises shared-parameter gradients.
//
// Distributions and log-probabilities are always computed through the
// kernel softmax / log-softmax; rewards read them at temperature 1, the
// sampling temperature applies only to rollout generation.

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <string>
#include <vector>

#include "tcer/rng.hpp"
#include "tcer/vocab.hpp"

namespace tcer {

// The decoding context: prompt plus tokens generated so far. Policies read
// only the trailing window they condition on; longer contexts are truncated
// from the left.
struct Context {
    std::span<const int> prompt;
    std::span<const int> generated;

    std::size_t size() const { return prompt.size() + generated.size(); }
    int at(std::size_t i) const {
        return i < prompt.size() ? prompt[i] : generated[i - prompt.size()];
    }
};

struct TokenDist {
    std::vector<double> probs;
};

// H(p) in nats; 0 log 0 = 0.
double entropy(const TokenDist& dist);

enum class PolicyKind { tabular_ngram, linear_neural };

struct PolicyShape {
    PolicyKind kind = PolicyKind::tabular_ngram;
    int order = 2;   // tabular: conditions on the previous (order - 1) tokens
    int window = 4;  // neural: pooled context width
    int hidden = 8;  // neural: embedding size

    std::size_t param_count(int vocab_size) const;
    bool operator==(const PolicyShape&) const = default;
};

class Policy {
public:
    Policy(PolicyShape shape, Vocabulary vocab);  // zero-initialized parameters

    static Policy init_random(PolicyShape shape, Vocabulary vocab, double scale,
                              rng::Stream stream);

    static Policy from_json(const nlohmann::json& j);
    static Policy load(const std::string& path);
    // Checkpoint text; float values carry 17 significant digits so a
    // save/load round trip is bit-exact.
    std::string to_json_string() const;
    void save(const std::string& path) const;

    const PolicyShape& shape() const { return shape_; }
    const Vocabulary& vocab() const { return vocab_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    std::size_t param_count() const { return values_.size(); }

    TokenDist next_token_dist(const Context& ctx, double temperature) const;

    // log pi(token | ctx) at temperature 1, via log-softmax.
    double log_prob(const Context& ctx, int token) const;

    // Full log-softmax row at temperature 1.
    void log_probs_all(const Context& ctx, std::span<double> out) const;

    // d log pi(token | ctx) / d params, dense. Exact; checked against
    // central finite differences in the tests.
    std::vector<double> log_prob_grad(const Context& ctx, int token) const;

    // grad += weight * d log pi(token | ctx) / d params. The workhorse for
    // the training loops; touches only the parameters the context reaches.
    void accumulate_log_prob_grad(const Context& ctx, int token, double weight,
                                  std::span<double> grad) const;

    // Autoregressive sampling until EOS or max_len generated tokens.
    // Deterministic in (params, prompt, stream).
    TokenSeq sample_rollout(std::span<const int> prompt, double temperature, int max_len,
                            rng::Stream& stream) const;

    // Tabular only: the enumerable context rows.
    std::size_t context_rows() const;
    std::size_t context_row(const Context& ctx) const;
    TokenDist row_dist(std::size_t row) const;

private:
    void logits_for(const Context& ctx, std::vector<double>& logits,
                    std::vector<double>* pooled) const;
    void check_context(const Context& ctx) const;

    PolicyShape shape_;
    Vocabulary vocab_;
    std::vector<double> values_;
};

// Mean over all tabular context rows of KL(a(.|row) || b(.|row)), exact.
// The enumerated-context diagnostic used by the KL-penalty tests.
double exact_kl_tabular(const Policy& a, const Policy& b);

// Prompts condition generation, so they must not carry a trailing EOS.
TokenSeq strip_eos(TokenSeq seq, const Vocabulary& vocab);

}  // namespace tcer
