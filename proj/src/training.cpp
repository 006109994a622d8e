#include "dcgcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dcgcn/adam.hpp"
#include "dcgcn/errors.hpp"

namespace dcgcn {

void TrainOptions::validate() const {
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be a finite non-negative number");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!std::isfinite(clip_norm)) throw ConfigError("clip norm must be finite");
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch,
                                                    std::uint64_t seed, int epoch) {
    if (batch == 0) throw ConfigError("batch must be >= 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < count; i += batch)
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch)));
    return out;
}

namespace {

std::vector<const ExtendedLeviGraph*> select(const std::vector<ExtendedLeviGraph>& data,
                                             const std::vector<std::size_t>& ids) {
    std::vector<const ExtendedLeviGraph*> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(&data[i]);
    return out;
}

}  // namespace

double corpus_loss(Model& model, const std::vector<ExtendedLeviGraph>& data, std::size_t batch) {
    if (data.empty()) throw InputError("cannot evaluate an empty corpus");
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t i = 0; i < data.size(); i += batch) {
        std::vector<const ExtendedLeviGraph*> part;
        for (std::size_t j = i; j < std::min(data.size(), i + batch); ++j) part.push_back(&data[j]);
        Tape tape(Tape::Mode::inference);
        LossOutput out = model.loss(tape, model.batch(part));
        nll += out.loss.value()[0] * static_cast<double>(out.tokens);
        tokens += out.tokens;
    }
    return nll / static_cast<double>(tokens);
}

TrainResult train(Model& model, const std::vector<ExtendedLeviGraph>& train_set,
                  const std::vector<ExtendedLeviGraph>& dev_set, const TrainOptions& options,
                  const EpochCallback& on_epoch) {
    options.validate();
    if (train_set.empty()) throw InputError("empty training corpus");
    if (dev_set.empty()) throw InputError("empty development corpus");

    AdamOptions adam;
    adam.learning_rate = options.learning_rate;
    adam.clip_norm = options.clip_norm;
    AdamState state(model.params(), adam);
    ParamStore best = model.params();
    TrainResult result;
    int stale = 0;

    for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        double nll = 0.0;
        std::size_t tokens = 0;
        try {
            for (const auto& ids : epoch_batches(train_set.size(), options.batch, options.seed, epoch)) {
                model.params().zero_grad();
                Tape tape;
                LossOutput out = model.loss(tape, model.batch(select(train_set, ids)));
                tape.backward(out.loss);
                AdamReport report = adam_step(model.params(), state);
                if (!report.applied) ++rec.skipped_updates;
                nll += out.loss.value()[0] * static_cast<double>(out.tokens);
                tokens += out.tokens;
            }
            rec.train_loss = nll / static_cast<double>(tokens);
            rec.dev_loss = corpus_loss(model, dev_set, options.batch);
            rec.dev_perplexity = std::exp(rec.dev_loss);
            if (!std::isfinite(rec.dev_perplexity))
                throw NumericError("development perplexity overflowed at epoch " + std::to_string(epoch));
        } catch (const NumericError& e) {
            model.params().assign_values(best);
            result.diverged = true;
            result.message = "diverged at epoch " + std::to_string(epoch) + ": " + e.what();
            return result;
        }
        if (rec.dev_perplexity < result.best_dev_perplexity) {
            rec.improved = true;
            result.best_dev_perplexity = rec.dev_perplexity;
            result.best_epoch = epoch;
            best.assign_values(model.params());
            stale = 0;
        } else {
            ++stale;
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (stale >= options.patience) {
            result.early_stopped = true;
            result.message = "no dev improvement for " + std::to_string(stale) + " epochs";
            break;
        }
    }
    model.params().assign_values(best);
    if (result.message.empty()) result.message = "reached max epochs";
    return result;
}

}  // namespace dcgcn
