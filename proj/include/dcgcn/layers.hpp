#pragma once
// Graph convolution building blocks operating on tape variables. Every
// function works on a (possibly block-diagonal) merged graph described by a
// TypedAdjacency; node features are (nodes x width) row matrices.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dcgcn/levi.hpp"
#include "dcgcn/tape.hpp"

namespace dcgcn {

/// Message edges of a graph grouped by edge type. Edge e carries
/// information from source[e] to target[e]; edges are sorted by type so
/// type t owns the range [offset[t], offset[t + 1]).
struct TypedAdjacency {
    std::size_t nodes = 0;
    std::size_t types = 0;
    std::vector<Index> source;
    std::vector<Index> target;
    std::vector<std::size_t> offset;

    std::size_t edge_count() const { return source.size(); }
    std::size_t edge_count(std::size_t type) const { return offset[type + 1] - offset[type]; }
    std::vector<Index> sources_of(std::size_t type) const;
    std::vector<Index> targets_of(std::size_t type) const;
    /// Positions of type t's edges in the full edge list.
    std::vector<Index> edge_ids_of(std::size_t type) const;
    /// |N(v)| per node.
    std::vector<std::size_t> in_degree() const;
};

/// Message edges for the first `types` edge types of a Levi graph. Global
/// edges are used in both directions so the global node gathers from every
/// node as well as broadcasting to it. Edges of a type >= `types` are
/// rejected, as is any node without an incoming self edge.
TypedAdjacency build_adjacency(const ExtendedLeviGraph& graph, std::size_t types,
                               bool bidirectional_global = true);

/// Concatenate graphs into one block-diagonal adjacency.
TypedAdjacency merge_adjacency(std::span<const TypedAdjacency> parts);

enum class Activation { relu, identity };

/// h_v = act(sum_{u in N(v)} W_{c(u,v)} h_u + b), where the weight class of
/// an edge is weight_class[type]. One class gives the plain GCN layer. With
/// `node_scale` (nodes x 1) the neighborhood sum of node v is multiplied by
/// node_scale[v] before the bias.
Var gcn_layer(Var h, const TypedAdjacency& adj, const std::vector<Var>& weights, Var bias,
              std::span<const std::size_t> weight_class, Activation act = Activation::relu,
              std::optional<Var> node_scale = std::nullopt);
/// gcn_layer plus the input (requires equal input and output width).
Var gcn_residual(Var h, const TypedAdjacency& adj, const std::vector<Var>& weights, Var bias,
                 std::span<const std::size_t> weight_class, Activation act = Activation::relu,
                 std::optional<Var> node_scale = std::nullopt);
/// 1 / |N(v)| per node (nodes x 1 constant).
Var mean_scale(Tape& tape, const TypedAdjacency& adj);

/// Concatenate every layer's output and map back with W (d x L*d) and b.
Var layer_aggregate(const std::vector<Var>& layers, Var weight, Var bias);

/// [x ; h1 ; ... ; h_{l-1}]; every prior output must have the same width.
Var dense_gather(Var x, const std::vector<Var>& prior);

enum class AttentionMode {
    learned,  // masked softmax of LeakyReLU(a^T [W_a g_i ; W_a g_j])
    uniform,  // 1 / |N(v)|
    none,     // every coefficient 1 (plain sum)
};

/// Coefficients per message edge (edge_count x 1), normalized over each
/// target's neighborhood. `transformed` holds node-wise transformed features.
Var graph_attention(Var transformed, const TypedAdjacency& adj, Var attn_proj, Var attn_vec,
                    double slope);
Var fixed_attention(Tape& tape, const TypedAdjacency& adj, AttentionMode mode);

/// v_t = relu(sum_{u: type(u,v)=t} alpha_vu W_t g_u + b_t) for every type t;
/// types without edges at v yield relu(b_t). `weights`/`biases` hold one
/// entry per type, or a single shared entry.
std::vector<Var> directional_conv(Var g, const TypedAdjacency& adj, Var alpha,
                                  const std::vector<Var>& weights, const std::vector<Var>& biases);

/// relu(W_f [v_1; ...; v_T] + b_f).
Var direction_aggregate(const std::vector<Var>& per_type, Var weight, Var bias);
/// relu(mean_t v_t), used when direction aggregation is switched off.
Var direction_mean(const std::vector<Var>& per_type);

struct DenseLayerVars {
    std::vector<Var> weight;  // per type, or one shared
    std::vector<Var> bias;
    Var attn_proj;            // (dh x dh)
    Var attn_vec;             // (1 x 2dh)
    Var agg_weight;           // (dh x T*dh), unused without direction aggregation
    Var agg_bias;
};

struct LayerOptions {
    AttentionMode attention = AttentionMode::learned;
    bool direction_aggregation = true;
    double slope = 0.2;
};

struct DenseLayerTrace {
    std::size_t input_width = 0;
    Var alpha;
};

/// One attention + directional convolution layer on gathered input g.
Var dense_layer(Var g, const TypedAdjacency& adj, const DenseLayerVars& p,
                const LayerOptions& options, DenseLayerTrace* trace = nullptr);

/// L densely connected layers; returns [h1; ...; hL] (width L * d_hidden).
/// Without dense connections layer l > 1 sees only h_{l-1}.
Var sublock_forward(Var x, const TypedAdjacency& adj, const std::vector<DenseLayerVars>& layers,
                    const LayerOptions& options, bool dense = true,
                    std::vector<DenseLayerTrace>* traces = nullptr);

/// W_comb (h_out + x) + b_comb.
Var linear_combination(Var h_out, Var x, Var weight, Var bias);

}  // namespace dcgcn
