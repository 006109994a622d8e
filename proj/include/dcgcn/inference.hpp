#pragma once
// Beam search and greedy decoding over any next-token scorer.

#include <cstdint>
#include <memory>
#include <vector>

#include "dcgcn/model.hpp"

namespace dcgcn {

/// Opaque per-hypothesis state owned by a scorer.
struct ScorerState {
    virtual ~ScorerState() = default;
};
using ScorerStatePtr = std::shared_ptr<const ScorerState>;

class StepScorer {
   public:
    virtual ~StepScorer() = default;
    virtual std::size_t vocab_size() const = 0;
    virtual ScorerStatePtr initial_state() = 0;
    /// Log-probabilities over the vocabulary after feeding `token`.
    virtual std::vector<double> step(const ScorerStatePtr& state, std::int32_t token,
                                     ScorerStatePtr& next) = 0;
};

struct DecodeOptions {
    std::size_t beam = 10;
    std::size_t max_length = 50;  // tokens, counting <eos>
    bool length_normalize = true;
    std::int32_t bos = 2;
    std::int32_t eos = 3;
};

struct Hypothesis {
    std::vector<std::int32_t> tokens;  // ends with eos when finished
    double log_prob = 0.0;
    bool finished = false;

    double score(bool length_normalize) const;
};

/// Hypotheses ending in eos retire to a pool; survivors at max_length are
/// force-finished. Candidates are ranked by (score desc, token id asc).
Hypothesis beam_search(StepScorer& scorer, const DecodeOptions& options);
Hypothesis greedy_decode(StepScorer& scorer, const DecodeOptions& options);

/// Decoder of a trained model for one source graph.
class ModelScorer : public StepScorer {
   public:
    ModelScorer(Model& model, const ExtendedLeviGraph& graph);
    std::size_t vocab_size() const override { return model_.vocab_size(); }
    ScorerStatePtr initial_state() override;
    std::vector<double> step(const ScorerStatePtr& state, std::int32_t token,
                             ScorerStatePtr& next) override;
    std::size_t levi_nodes() const { return source_.levi_nodes; }

   private:
    Model& model_;
    SourceEncoding source_;
};

/// 2 * Levi node count + 10.
std::size_t default_max_length(std::size_t levi_nodes);

/// Decodes one graph; beam 1 uses greedy search. Returns ids without eos.
std::vector<std::int32_t> generate(Model& model, const ExtendedLeviGraph& graph,
                                   std::size_t beam, bool length_normalize = true);

}  // namespace dcgcn
