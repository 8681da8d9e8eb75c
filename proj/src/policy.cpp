#include "tcer/policy.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>

#include "tcer/common.hpp"
#include "tcer/kernels.hpp"
#include "tcer/serde.hpp"

namespace tcer {

namespace {

constexpr double kMaxContextRows = 1u << 24;

const char* kind_name(PolicyKind k) {
    return k == PolicyKind::tabular_ngram ? "tabular_ngram" : "linear_neural";
}

PolicyKind kind_from_name(const std::string& s) {
    if (s == "tabular_ngram") return PolicyKind::tabular_ngram;
    if (s == "linear_neural") return PolicyKind::linear_neural;
    throw DataError("unknown policy kind: " + s);
}

}  // namespace

double entropy(const TokenDist& dist) { return kernels::entropy(dist.probs); }

std::size_t PolicyShape::param_count(int vocab_size) const {
    std::size_t v = static_cast<std::size_t>(vocab_size);
    if (kind == PolicyKind::tabular_ngram) {
        std::size_t rows = 1;
        for (int i = 0; i < order - 1; ++i) {
            rows *= v + 1;
            if (rows > kMaxContextRows) throw DataError("tabular context table too large");
        }
        return rows * v;
    }
    std::size_t h = static_cast<std::size_t>(hidden);
    return (v + 1) * h + v * h + v;  // embeddings (PAD row included), output weights, bias
}

Policy::Policy(PolicyShape shape, Vocabulary vocab)
    : shape_(shape), vocab_(std::move(vocab)) {
    if (shape_.kind == PolicyKind::tabular_ngram && shape_.order < 1)
        throw DataError("tabular order must be >= 1");
    if (shape_.kind == PolicyKind::linear_neural && (shape_.window < 1 || shape_.hidden < 1))
        throw DataError("neural window and hidden size must be >= 1");
    values_.assign(shape_.param_count(vocab_.size()), 0.0);
}

Policy Policy::init_random(PolicyShape shape, Vocabulary vocab, double scale,
                           rng::Stream stream) {
    Policy p(shape, std::move(vocab));
    for (auto& v : p.values_) v = stream.symmetric(scale);
    return p;
}

void Policy::check_context(const Context& ctx) const {
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        int id = ctx.at(i);
        if (id < 0 || id >= vocab_.size())
            throw DataError("invalid token id in context: " + std::to_string(id));
    }
}

std::size_t Policy::context_rows() const {
    if (shape_.kind != PolicyKind::tabular_ngram)
        throw DataError("context_rows: policy is not tabular");
    return values_.size() / static_cast<std::size_t>(vocab_.size());
}

std::size_t Policy::context_row(const Context& ctx) const {
    // Row index from the previous (order - 1) tokens, most recent first;
    // positions before the sequence start use the PAD symbol (id = V).
    std::size_t v1 = static_cast<std::size_t>(vocab_.size()) + 1;
    std::size_t row = 0;
    std::size_t stride = 1;
    std::size_t len = ctx.size();
    for (int j = 1; j <= shape_.order - 1; ++j) {
        std::size_t tok = (static_cast<std::size_t>(j) <= len)
                              ? static_cast<std::size_t>(ctx.at(len - static_cast<std::size_t>(j)))
                              : static_cast<std::size_t>(vocab_.size());
        row += tok * stride;
        stride *= v1;
    }
    return row;
}

TokenDist Policy::row_dist(std::size_t row) const {
    std::size_t v = static_cast<std::size_t>(vocab_.size());
    TokenDist d;
    d.probs.resize(v);
    kernels::softmax(std::span<const double>(values_.data() + row * v, v), 1.0, d.probs);
    return d;
}

void Policy::logits_for(const Context& ctx, std::vector<double>& logits,
                        std::vector<double>* pooled) const {
    check_context(ctx);
    std::size_t v = static_cast<std::size_t>(vocab_.size());
    logits.resize(v);
    if (shape_.kind == PolicyKind::tabular_ngram) {
        std::size_t row = context_row(ctx);
        std::memcpy(logits.data(), values_.data() + row * v, v * sizeof(double));
        return;
    }
    // linear neural: mean-pooled embeddings of the trailing window
    std::size_t h = static_cast<std::size_t>(shape_.hidden);
    std::vector<double> local;
    std::vector<double>& hv = pooled ? *pooled : local;
    hv.assign(h, 0.0);
    std::size_t len = ctx.size();
    double inv_w = 1.0 / static_cast<double>(shape_.window);
    for (int j = 1; j <= shape_.window; ++j) {
        std::size_t tok = (static_cast<std::size_t>(j) <= len)
                              ? static_cast<std::size_t>(ctx.at(len - static_cast<std::size_t>(j)))
                              : v;  // PAD
        const double* emb = values_.data() + tok * h;
        for (std::size_t d = 0; d < h; ++d) hv[d] += emb[d];
    }
    for (std::size_t d = 0; d < h; ++d) hv[d] *= inv_w;
    const double* w_base = values_.data() + (v + 1) * h;
    const double* bias = w_base + v * h;
    std::span<const double> hspan(hv.data(), h);
    for (std::size_t i = 0; i < v; ++i) {
        logits[i] = kernels::dot(std::span<const double>(w_base + i * h, h), hspan) + bias[i];
    }
}

TokenDist Policy::next_token_dist(const Context& ctx, double temperature) const {
    if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
    std::vector<double> logits;
    logits_for(ctx, logits, nullptr);
    TokenDist d;
    d.probs.resize(logits.size());
    kernels::softmax(logits, 1.0 / temperature, d.probs);
    return d;
}

void Policy::log_probs_all(const Context& ctx, std::span<double> out) const {
    std::vector<double> logits;
    logits_for(ctx, logits, nullptr);
    kernels::log_softmax(logits, 1.0, out);
}

double Policy::log_prob(const Context& ctx, int token) const {
    if (token < 0 || token >= vocab_.size())
        throw DataError("invalid token id: " + std::to_string(token));
    std::vector<double> lp(static_cast<std::size_t>(vocab_.size()));
    log_probs_all(ctx, lp);
    return lp[static_cast<std::size_t>(token)];
}

void Policy::accumulate_log_prob_grad(const Context& ctx, int token, double weight,
                                      std::span<double> grad) const {
    if (grad.size() != values_.size()) throw DataError("gradient buffer size mismatch");
    if (token < 0 || token >= vocab_.size())
        throw DataError("invalid token id: " + std::to_string(token));
    std::size_t v = static_cast<std::size_t>(vocab_.size());
    std::vector<double> logits;
    std::vector<double> pooled;
    logits_for(ctx, logits, &pooled);
    std::vector<double> probs(v);
    kernels::softmax(logits, 1.0, probs);

    // d log p(y) / d logits = onehot(y) - probs
    if (shape_.kind == PolicyKind::tabular_ngram) {
        std::size_t row = context_row(ctx);
        double* g = grad.data() + row * v;
        for (std::size_t i = 0; i < v; ++i) g[i] -= weight * probs[i];
        g[static_cast<std::size_t>(token)] += weight;
        return;
    }
    std::size_t h = static_cast<std::size_t>(shape_.hidden);
    const double* w_base = values_.data() + (v + 1) * h;
    double* gW = grad.data() + (v + 1) * h;
    double* gb = gW + v * h;
    std::vector<double> dh(h, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
        double gi = ((static_cast<int>(i) == token) ? 1.0 : 0.0) - probs[i];
        double wg = weight * gi;
        gb[i] += wg;
        const double* w_row = w_base + i * h;
        double* gw_row = gW + i * h;
        for (std::size_t d = 0; d < h; ++d) {
            gw_row[d] += wg * pooled[d];
            dh[d] += wg * w_row[d];
        }
    }
    std::size_t len = ctx.size();
    double inv_w = 1.0 / static_cast<double>(shape_.window);
    for (int j = 1; j <= shape_.window; ++j) {
        std::size_t tok = (static_cast<std::size_t>(j) <= len)
                              ? static_cast<std::size_t>(ctx.at(len - static_cast<std::size_t>(j)))
                              : v;  // PAD
        double* ge = grad.data() + tok * h;
        for (std::size_t d = 0; d < h; ++d) ge[d] += dh[d] * inv_w;
    }
}

std::vector<double> Policy::log_prob_grad(const Context& ctx, int token) const {
    std::vector<double> grad(values_.size(), 0.0);
    accumulate_log_prob_grad(ctx, token, 1.0, grad);
    return grad;
}

TokenSeq Policy::sample_rollout(std::span<const int> prompt, double temperature, int max_len,
                                rng::Stream& stream) const {
    if (max_len < 1) throw UsageError("max_len must be >= 1");
    TokenSeq out;
    out.ids.reserve(static_cast<std::size_t>(max_len));
    for (int t = 0; t < max_len; ++t) {
        Context ctx{prompt, out.ids};
        TokenDist d = next_token_dist(ctx, temperature);
        int y = stream.categorical(d.probs);
        out.ids.push_back(y);
        if (y == vocab_.eos_id()) break;
    }
    return out;
}

nlohmann::json shape_to_json(const PolicyShape& s) {
    if (s.kind == PolicyKind::tabular_ngram) return nlohmann::json{{"order", s.order}};
    return nlohmann::json{{"window", s.window}, {"hidden", s.hidden}};
}

std::string Policy::to_json_string() const {
    nlohmann::json head{
        {"kind", kind_name(shape_.kind)},
        {"shape", shape_to_json(shape_)},
        {"vocab", vocab_.to_json()},
    };
    // Values are emitted by hand with 17 significant digits; the structural
    // part goes through the JSON library.
    std::string out = "{\"kind\":" + head["kind"].dump() + ",\"shape\":" + head["shape"].dump() +
                      ",\"vocab\":" + head["vocab"].dump() +
                      ",\"values\":" + serde::g17_array(values_) + "}\n";
    return out;
}

void Policy::save(const std::string& path) const { serde::write_file(path, to_json_string()); }

Policy Policy::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("shape") || !j.contains("vocab") ||
        !j.contains("values"))
        throw DataError("checkpoint must have kind/shape/vocab/values");
    PolicyShape shape;
    shape.kind = kind_from_name(j.at("kind").get<std::string>());
    const auto& js = j.at("shape");
    if (shape.kind == PolicyKind::tabular_ngram) {
        shape.order = js.at("order").get<int>();
    } else {
        shape.window = js.at("window").get<int>();
        shape.hidden = js.at("hidden").get<int>();
    }
    Policy p(shape, Vocabulary::from_json(j.at("vocab")));
    std::vector<double> values = j.at("values").get<std::vector<double>>();
    if (values.size() != p.values_.size())
        throw DataError("checkpoint value count " + std::to_string(values.size()) +
                        " does not match shape (expected " + std::to_string(p.values_.size()) +
                        ")");
    p.values_ = std::move(values);
    return p;
}

Policy Policy::load(const std::string& path) {
    return from_json(serde::parse_json(serde::read_file(path), path));
}

double exact_kl_tabular(const Policy& a, const Policy& b) {
    if (a.shape().kind != PolicyKind::tabular_ngram || b.shape().kind != PolicyKind::tabular_ngram)
        throw DataError("exact_kl_tabular needs tabular policies");
    if (!(a.vocab() == b.vocab()) || !(a.shape() == b.shape()))
        throw DataError("exact_kl_tabular: policies must share vocabulary and shape");
    std::size_t rows = a.context_rows();
    std::size_t v = static_cast<std::size_t>(a.vocab().size());
    std::vector<double> lpa(v), lpb(v), pa(v);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        std::span<const double> la(a.values().data() + r * v, v);
        std::span<const double> lb(b.values().data() + r * v, v);
        kernels::log_softmax(la, 1.0, lpa);
        kernels::log_softmax(lb, 1.0, lpb);
        kernels::exp_array(lpa, pa);
        double kl = 0.0;
        for (std::size_t i = 0; i < v; ++i) kl += pa[i] * (lpa[i] - lpb[i]);
        total += kl;
    }
    return total / static_cast<double>(rows);
}

TokenSeq strip_eos(TokenSeq seq, const Vocabulary& vocab) {
    if (!seq.ids.empty() && seq.ids.back() == vocab.eos_id()) seq.ids.pop_back();
    return seq;
}

}  // namespace tcer
