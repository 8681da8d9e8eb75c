#pragma once

// Maximum-likelihood fitting: the generalist is fit on the general corpus,
// the specialist is then fit from the generalist's parameters on in-domain
// data. Tabular policies use full-batch gradient ascent (their MLE has a
// counting closed form the tests compare against); neural policies use
// seeded mini-batches.

#include <cstdint>
#include <vector>

#include "tcer/policy.hpp"
#include "tcer/vocab.hpp"

namespace tcer::sft {

struct FitConfig {
    int epochs = 30;
    double learning_rate = 0.5;
    int batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FitResult {
    Policy params;
    std::vector<double> epoch_losses;  // mean NLL after each epoch
};

// Deterministic in (init, corpus, config); gradient accumulation across
// sequences reduces through a fixed pairwise tree, so the thread count
// never changes the result.
FitResult fit_mle(const Policy& init, const Corpus& corpus, const FitConfig& cfg,
                  int threads = 1);

// Mean per-token log-probability over the corpus; always <= 0.
double corpus_log_likelihood(const Policy& params, const Corpus& corpus);

}  // namespace tcer::sft
