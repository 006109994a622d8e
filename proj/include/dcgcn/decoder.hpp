#pragma once
// Two-layer LSTM decoder with additive attention and coverage. All functions
// work on a batch of B sequences; the attention memory of the batch is one
// merged matrix whose rows are tagged with their sequence index.

#include <cstdint>
#include <vector>

#include "dcgcn/params.hpp"
#include "dcgcn/tape.hpp"

namespace dcgcn {

struct DecoderConfig {
    int memory_dim = 360;  // width of encoder node states
    int hidden = 360;
    int embedding = 360;
    int attention = 360;
    bool coverage = true;
};

/// Per-sequence recurrent state as tape variables (B rows each).
struct DecoderVars {
    Var h1, c1, h2, c2;
    Var context;   // B x memory_dim
    Var coverage;  // memory_rows x 1
};

struct AttentionMemory {
    Var memory;     // rows x memory_dim
    Var projected;  // memory * V^T, rows x attention
    std::vector<Index> segment;
    std::size_t batch = 0;
};

struct AttentionOutput {
    Var context;
    Var alpha;  // memory_rows x 1
    Var coverage;
};

struct StepOutput {
    Var logits;  // B x vocab
    Var alpha;
    DecoderVars state;
};

class Decoder {
   public:
    Decoder(const DecoderConfig& config, std::size_t vocab_size, ParamStore& params, Rng& rng);

    const DecoderConfig& config() const { return config_; }
    std::size_t vocab_size() const { return vocab_size_; }

    AttentionMemory prepare_memory(Tape& tape, ParamStore& params, Var memory,
                                   std::vector<Index> segment, std::size_t batch) const;
    /// h = c = tanh(W source + b) for both layers; zero context and coverage.
    DecoderVars init_state(Tape& tape, ParamStore& params, Var source,
                           std::size_t memory_rows) const;
    AttentionOutput attend(Tape& tape, ParamStore& params, Var query, Var coverage,
                           const AttentionMemory& memory) const;
    StepOutput step(Tape& tape, ParamStore& params, const DecoderVars& state,
                    const std::vector<std::int32_t>& previous, const AttentionMemory& memory) const;

   private:
    struct LstmIds {
        std::size_t w_input, w_hidden, bias;
    };
    std::pair<Var, Var> lstm(Tape& tape, ParamStore& params, const LstmIds& ids, Var x, Var h,
                             Var c) const;

    DecoderConfig config_;
    std::size_t vocab_size_;
    std::size_t embedding_ = 0;
    std::size_t init_h_w_ = 0, init_h_b_ = 0, init_c_w_ = 0, init_c_b_ = 0;
    LstmIds layers_[2]{};
    std::size_t attn_query_ = 0, attn_memory_ = 0, attn_score_ = 0, attn_coverage_ = 0;
    std::size_t out_w_ = 0, out_b_ = 0;
};

}  // namespace dcgcn
