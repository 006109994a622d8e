#pragma once
// Epoch loop with seeded shuffling, Adam updates and early stopping on
// development perplexity.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dcgcn/model.hpp"

namespace dcgcn {

struct TrainOptions {
    std::size_t batch = 16;
    double learning_rate = 0.0003;
    int max_epochs = 30;
    int patience = 3;  // epochs without dev improvement before stopping
    std::uint64_t seed = 1;
    double clip_norm = 5.0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double dev_perplexity = 0.0;
    bool improved = false;
    std::size_t skipped_updates = 0;  // steps dropped for non-finite gradients
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_dev_perplexity = std::numeric_limits<double>::infinity();
    bool early_stopped = false;
    bool diverged = false;
    std::string message;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Index batches of one epoch: a permutation of 0..count-1 drawn from a
/// generator seeded with (seed, epoch), cut into runs of `batch`.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch,
                                                    std::uint64_t seed, int epoch);

/// Mean token NLL of the model over a corpus, without gradients.
double corpus_loss(Model& model, const std::vector<ExtendedLeviGraph>& data, std::size_t batch);

/// Trains in place. On return the model holds the parameters of the best dev
/// epoch; on divergence it holds the last good parameters and `diverged` is set.
TrainResult train(Model& model, const std::vector<ExtendedLeviGraph>& train_set,
                  const std::vector<ExtendedLeviGraph>& dev_set, const TrainOptions& options,
                  const EpochCallback& on_epoch = {});

}  // namespace dcgcn
