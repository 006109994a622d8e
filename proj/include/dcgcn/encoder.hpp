#pragma once
// DCGCN graph encoder and the GCN+RC / GCN+RC+LA baselines.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "dcgcn/layers.hpp"
#include "dcgcn/params.hpp"

namespace dcgcn {

enum class EncoderKind { dcgcn, gcn_rc, gcn_rc_la };

std::string_view encoder_kind_name(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

/// Switches that remove one module each. Dense-block indices are 1-based.
struct Ablation {
    bool linear_combination = false;
    bool global_node = false;
    bool direction_aggregation = false;
    bool graph_attention = false;
    bool coverage = false;
    std::set<int> dense_blocks;

    bool any() const;
    /// Comma-separated flags: linear-combination, global-node,
    /// direction-aggregation, graph-attention, coverage, dense-<i>.
    static Ablation parse(std::string_view list);
    std::string to_string() const;
    friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct EncoderConfig {
    EncoderKind kind = EncoderKind::dcgcn;
    int blocks = 4;
    int n = 6;  // layers in the first sub-block
    int m = 3;  // layers in the second sub-block (0 drops it)
    int d = 360;
    int edge_types = 4;
    int pos_dim = 60;
    double slope = 0.2;
    int gcn_layers = 0;  // depth of the baseline stacks
    bool gcn_mean = true;  // baseline layers average over N(v) instead of summing

    int word_dim() const { return d - pos_dim; }
    int hidden_dim(int layers) const { return d / layers; }
    /// Throws ConfigError on divisibility or range violations.
    void validate(const Ablation& ablation = {}) const;
    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Positions are clamped to [-1, kMaxPosition]; -1 (global node) has its own row.
inline constexpr int kMaxPosition = 30;
inline constexpr std::size_t kPositionRows = kMaxPosition + 2;

struct EncoderTrace {
    /// Per dense layer in execution order: block, sub-block, layer and trace.
    struct Layer {
        int block;
        int sub;
        int layer;
        DenseLayerTrace trace;
    };
    std::vector<Layer> layers;
};

class Encoder {
   public:
    /// Registers all encoder parameters in `params` (names prefixed "enc.").
    Encoder(const EncoderConfig& config, const Ablation& ablation, std::size_t vocab_size,
            ParamStore& params, Rng& rng);

    const EncoderConfig& config() const { return config_; }

    /// [word embedding ; position embedding] per node.
    Var embed(Tape& tape, ParamStore& params, const std::vector<std::int32_t>& tokens,
              const std::vector<std::int32_t>& positions) const;
    /// Node representations (nodes x d) from input features x (nodes x d).
    Var encode_features(Tape& tape, ParamStore& params, Var x, const TypedAdjacency& adj,
                        EncoderTrace* trace = nullptr) const;
    Var encode(Tape& tape, ParamStore& params, const std::vector<std::int32_t>& tokens,
               const std::vector<std::int32_t>& positions, const TypedAdjacency& adj,
               EncoderTrace* trace = nullptr) const;

   private:
    struct DenseLayerIds {
        std::vector<std::size_t> weight, bias;
        std::size_t attn_proj = 0, attn_vec = 0, agg_weight = 0, agg_bias = 0;
    };
    struct SubBlockIds {
        std::vector<DenseLayerIds> layers;
        std::size_t comb_weight = 0, comb_bias = 0;
    };
    struct GcnLayerIds {
        std::size_t w_self = 0, w_neighbor = 0, bias = 0;
    };

    DenseLayerVars bind(Tape& tape, ParamStore& params, const DenseLayerIds& ids) const;
    Var dcgcn_forward(Tape& tape, ParamStore& params, Var x, const TypedAdjacency& adj,
                      EncoderTrace* trace) const;
    Var gcn_forward(Tape& tape, ParamStore& params, Var x, const TypedAdjacency& adj) const;

    EncoderConfig config_;
    Ablation ablation_;
    std::size_t vocab_size_;
    std::size_t word_emb_ = 0, pos_emb_ = 0;
    std::vector<std::vector<SubBlockIds>> blocks_;  // [block][sub]
    std::size_t final_weight_ = 0, final_bias_ = 0;
    std::vector<GcnLayerIds> gcn_;
    std::size_t la_weight_ = 0, la_bias_ = 0;
};

}  // namespace dcgcn
