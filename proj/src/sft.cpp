#include "tcer/sft.hpp"

#include <algorithm>
#include <future>

#include "tcer/common.hpp"
#include "tcer/rng.hpp"

namespace tcer::sft {

namespace {

void check_corpus(const Policy& p, const Corpus& corpus) {
    for (const TokenSeq& s : corpus.sequences) {
        if (s.ids.empty() || s.ids.back() != p.vocab().eos_id())
            throw DataError("corpus sequence not terminated with this vocabulary's EOS");
        for (int id : s.ids)
            if (id < 0 || id >= p.vocab().size())
                throw DataError("corpus token id out of range for policy vocabulary");
    }
}

std::vector<double> sequence_grad(const Policy& p, const TokenSeq& seq) {
    std::vector<double> g(p.param_count(), 0.0);
    for (std::size_t t = 0; t < seq.ids.size(); ++t) {
        Context ctx{{}, std::span<const int>(seq.ids.data(), t)};
        p.accumulate_log_prob_grad(ctx, seq.ids[t], 1.0, g);
    }
    return g;
}

// Pairwise tree over [lo, hi): the reduction order is a function of the
// index range alone, so results do not depend on the thread count.
std::vector<double> tree_grad(const Policy& p, const Corpus& corpus,
                              const std::vector<std::size_t>& order, std::size_t lo,
                              std::size_t hi, int threads) {
    if (hi - lo == 1) return sequence_grad(p, corpus.sequences[order[lo]]);
    std::size_t mid = lo + (hi - lo) / 2;
    std::vector<double> left, right;
    if (threads > 1 && hi - lo >= 4) {
        auto rf = std::async(std::launch::async, [&] {
            return tree_grad(p, corpus, order, mid, hi, threads / 2);
        });
        left = tree_grad(p, corpus, order, lo, mid, threads - threads / 2);
        right = rf.get();
    } else {
        left = tree_grad(p, corpus, order, lo, mid, 1);
        right = tree_grad(p, corpus, order, mid, hi, 1);
    }
    for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
    return left;
}

std::size_t token_count(const Corpus& corpus, const std::vector<std::size_t>& order,
                        std::size_t lo, std::size_t hi) {
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i) n += corpus.sequences[order[i]].size();
    return n;
}

}  // namespace

void FitConfig::validate() const {
    if (epochs < 0) throw UsageError("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
}

double corpus_log_likelihood(const Policy& params, const Corpus& corpus) {
    check_corpus(params, corpus);
    double total = 0.0;
    std::size_t tokens = 0;
    std::vector<double> lp(static_cast<std::size_t>(params.vocab().size()));
    for (const TokenSeq& seq : corpus.sequences) {
        for (std::size_t t = 0; t < seq.ids.size(); ++t) {
            Context ctx{{}, std::span<const int>(seq.ids.data(), t)};
            params.log_probs_all(ctx, lp);
            total += lp[static_cast<std::size_t>(seq.ids[t])];
            ++tokens;
        }
    }
    return total / static_cast<double>(tokens);
}

FitResult fit_mle(const Policy& init, const Corpus& corpus, const FitConfig& cfg, int threads) {
    cfg.validate();
    check_corpus(init, corpus);
    FitResult result{init, {}};
    Policy& p = result.params;
    std::size_t n = corpus.sequences.size();

    // Tabular fits run full-batch; the neural policy gets seeded mini-batches.
    bool full_batch = init.shape().kind == PolicyKind::tabular_ngram;
    rng::Stream shuffle_root = rng::Stream::root(cfg.seed).child(0x5f17);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (!full_batch) {
            rng::Stream es = shuffle_root.child(static_cast<std::uint64_t>(epoch));
            for (std::size_t i = n - 1; i > 0; --i) {
                std::size_t j = static_cast<std::size_t>(es.next_u64() % (i + 1));
                std::swap(order[i], order[j]);
            }
        }
        std::size_t batch = full_batch ? n : static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t lo = 0; lo < n; lo += batch) {
            std::size_t hi = std::min(n, lo + batch);
            std::vector<double> g = tree_grad(p, corpus, order, lo, hi, threads);
            double scale =
                cfg.learning_rate / static_cast<double>(token_count(corpus, order, lo, hi));
            for (std::size_t i = 0; i < g.size(); ++i) p.values()[i] += scale * g[i];
        }
        result.epoch_losses.push_back(-corpus_log_likelihood(p, corpus));
    }
    return result;
}

}  // namespace tcer::sft
