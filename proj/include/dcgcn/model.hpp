#pragma once
// Encoder + decoder with shared parameter storage, batching of Levi graphs and
// the teacher-forced loss.

#include <cstdint>
#include <vector>

#include "dcgcn/decoder.hpp"
#include "dcgcn/encoder.hpp"
#include "dcgcn/levi.hpp"

namespace dcgcn {

struct ModelConfig {
    EncoderConfig encoder;
    Ablation ablation;

    DecoderConfig decoder() const;
    void validate() const { encoder.validate(ablation); }
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Several graphs merged into one block-diagonal graph.
struct Batch {
    std::vector<std::int32_t> tokens;
    std::vector<std::int32_t> positions;
    TypedAdjacency adjacency;
    std::vector<std::size_t> node_offset;  // first merged node of each graph
    std::vector<Index> global_nodes;       // empty when graphs carry no global node
    std::vector<Index> memory_nodes;       // every non-global node
    std::vector<Index> memory_segment;     // graph index per memory row
    std::vector<std::vector<std::int32_t>> targets;

    std::size_t size() const { return targets.size(); }
};

/// Graphs without a global node are accepted only when `global_node` is
/// false; with it false any global node is stripped first.
Batch make_batch(const std::vector<const ExtendedLeviGraph*>& graphs, std::size_t edge_types,
                 bool global_node);

struct Encoded {
    Var nodes;   // merged node states
    Var source;  // per-graph decoder init source (global state or node mean)
    AttentionMemory memory;
};

struct LossOutput {
    Var loss;                          // mean token NLL over the batch
    Var example_nll;                   // B x 1, summed NLL per sequence
    std::vector<std::size_t> lengths;  // predicted tokens per sequence
    std::size_t tokens = 0;
};

/// Decoder state for one sequence, detached from any tape.
struct DecoderSnapshot {
    Tensor h1, c1, h2, c2, context, coverage;
};

/// Encoder output for one graph, reusable across decoding steps.
struct SourceEncoding {
    Tensor memory;
    Tensor projected;
    DecoderSnapshot initial;
    std::size_t levi_nodes = 0;
};

class Model {
   public:
    Model(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    std::size_t vocab_size() const { return vocab_size_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const Encoder& encoder() const { return encoder_; }
    const Decoder& decoder() const { return decoder_; }

    Batch batch(const std::vector<const ExtendedLeviGraph*>& graphs) const;
    Encoded encode(Tape& tape, const Batch& batch, EncoderTrace* trace = nullptr);
    LossOutput loss(Tape& tape, const Batch& batch);

    SourceEncoding prepare(const ExtendedLeviGraph& graph);
    /// Log-probabilities of the next token; writes the successor state.
    std::vector<double> step(const SourceEncoding& source, const DecoderSnapshot& state,
                             std::int32_t token, DecoderSnapshot& next);

   private:
    ModelConfig config_;
    std::size_t vocab_size_;
    ParamStore params_;
    Rng rng_;
    Encoder encoder_;
    Decoder decoder_;
};

}  // namespace dcgcn
