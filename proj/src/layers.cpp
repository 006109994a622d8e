#include "dcgcn/layers.hpp"

#include <numeric>
#include <optional>

#include "dcgcn/errors.hpp"

namespace dcgcn {

using namespace ops;

std::vector<Index> TypedAdjacency::sources_of(std::size_t type) const {
    return {source.begin() + static_cast<std::ptrdiff_t>(offset[type]),
            source.begin() + static_cast<std::ptrdiff_t>(offset[type + 1])};
}

std::vector<Index> TypedAdjacency::targets_of(std::size_t type) const {
    return {target.begin() + static_cast<std::ptrdiff_t>(offset[type]),
            target.begin() + static_cast<std::ptrdiff_t>(offset[type + 1])};
}

std::vector<Index> TypedAdjacency::edge_ids_of(std::size_t type) const {
    std::vector<Index> ids(edge_count(type));
    std::iota(ids.begin(), ids.end(), static_cast<Index>(offset[type]));
    return ids;
}

std::vector<std::size_t> TypedAdjacency::in_degree() const {
    std::vector<std::size_t> deg(nodes, 0);
    for (Index t : target) ++deg[t];
    return deg;
}

namespace {

void require_self_loops(const TypedAdjacency& adj) {
    std::vector<char> has_self(adj.nodes, 0);
    for (std::size_t e = 0; e < adj.edge_count(); ++e)
        if (adj.source[e] == adj.target[e]) has_self[adj.target[e]] = 1;
    for (std::size_t v = 0; v < adj.nodes; ++v)
        if (!has_self[v])
            throw InputError("node " + std::to_string(v) +
                             " has no self edge; every neighborhood must include the node");
}

}  // namespace

TypedAdjacency build_adjacency(const ExtendedLeviGraph& graph, std::size_t types,
                               bool bidirectional_global) {
    if (types == 0 || types > kEdgeTypeCount)
        throw ConfigError("edge type count must be in 1.." + std::to_string(kEdgeTypeCount));
    for (std::size_t t = types; t < kEdgeTypeCount; ++t)
        if (!graph.edges[t].empty())
            throw InputError("graph uses edge type '" +
                             std::string(edge_type_name(kAllEdgeTypes[t])) +
                             "' but the model is configured for " + std::to_string(types) +
                             " edge types");
    TypedAdjacency adj;
    adj.nodes = graph.node_count();
    adj.types = types;
    adj.offset.push_back(0);
    for (std::size_t t = 0; t < types; ++t) {
        for (const Edge& e : graph.edges[t]) {
            adj.source.push_back(e.source);
            adj.target.push_back(e.target);
        }
        if (bidirectional_global && kAllEdgeTypes[t] == EdgeType::global)
            for (const Edge& e : graph.edges[t]) {
                adj.source.push_back(e.target);
                adj.target.push_back(e.source);
            }
        adj.offset.push_back(adj.source.size());
    }
    require_self_loops(adj);
    return adj;
}

TypedAdjacency merge_adjacency(std::span<const TypedAdjacency> parts) {
    if (parts.empty()) throw InputError("cannot merge an empty set of graphs");
    TypedAdjacency out;
    out.types = parts.front().types;
    std::vector<std::size_t> base;
    for (const auto& p : parts) {
        if (p.types != out.types) throw InputError("merged graphs disagree on edge type count");
        base.push_back(out.nodes);
        out.nodes += p.nodes;
    }
    out.offset.push_back(0);
    for (std::size_t t = 0; t < out.types; ++t) {
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const auto& p = parts[i];
            for (std::size_t e = p.offset[t]; e < p.offset[t + 1]; ++e) {
                out.source.push_back(static_cast<Index>(p.source[e] + base[i]));
                out.target.push_back(static_cast<Index>(p.target[e] + base[i]));
            }
        }
        out.offset.push_back(out.source.size());
    }
    return out;
}

Var gcn_layer(Var h, const TypedAdjacency& adj, const std::vector<Var>& weights, Var bias,
              std::span<const std::size_t> weight_class, Activation act,
              std::optional<Var> node_scale) {
    if (h.rows() != adj.nodes)
        throw ShapeError("gcn_layer: " + std::to_string(h.rows()) + " feature rows for " +
                         std::to_string(adj.nodes) + " nodes");
    if (weight_class.size() != adj.types)
        throw ShapeError("gcn_layer: weight class map has " + std::to_string(weight_class.size()) +
                         " entries for " + std::to_string(adj.types) + " edge types");
    require_self_loops(adj);
    Tape& tape = *h.tape;
    std::optional<Var> sum;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        std::vector<Index> src, dst;
        for (std::size_t t = 0; t < adj.types; ++t) {
            if (weight_class[t] >= weights.size())
                throw ShapeError("gcn_layer: weight class out of range");
            if (weight_class[t] != c) continue;
            for (std::size_t e = adj.offset[t]; e < adj.offset[t + 1]; ++e) {
                src.push_back(adj.source[e]);
                dst.push_back(adj.target[e]);
            }
        }
        if (src.empty()) continue;
        Var projected = matmul_nt(h, weights[c]);
        Var messages = scatter_add_rows(gather_rows(projected, src), dst, adj.nodes);
        sum = sum ? add(*sum, messages) : messages;
    }
    if (!sum) sum = tape.constant(Tensor::matrix(adj.nodes, bias.cols()));
    if (node_scale) sum = mul_col(*sum, *node_scale);
    Var pre = add_row(*sum, bias);
    return act == Activation::relu ? relu(pre) : pre;
}

Var gcn_residual(Var h, const TypedAdjacency& adj, const std::vector<Var>& weights, Var bias,
                 std::span<const std::size_t> weight_class, Activation act,
                 std::optional<Var> node_scale) {
    for (const Var& w : weights)
        if (w.rows() != h.cols())
            throw ShapeError("gcn_residual: output width " + std::to_string(w.rows()) +
                             " differs from input width " + std::to_string(h.cols()));
    return add(gcn_layer(h, adj, weights, bias, weight_class, act, node_scale), h);
}

Var mean_scale(Tape& tape, const TypedAdjacency& adj) {
    const auto degree = adj.in_degree();
    Tensor scale = Tensor::matrix(adj.nodes, 1);
    for (std::size_t v = 0; v < adj.nodes; ++v)
        scale[v] = degree[v] ? 1.0 / static_cast<double>(degree[v]) : 0.0;
    return tape.constant(std::move(scale));
}

Var layer_aggregate(const std::vector<Var>& layers, Var weight, Var bias) {
    if (layers.empty()) throw ShapeError("layer_aggregate: no layer outputs");
    for (const Var& l : layers)
        if (l.rows() != layers.front().rows())
            throw ShapeError("layer_aggregate: layers disagree on node count");
    return linear(layers.size() == 1 ? layers.front() : concat_cols(layers), weight, bias);
}

Var dense_gather(Var x, const std::vector<Var>& prior) {
    if (prior.empty()) return x;
    const std::size_t width = prior.front().cols();
    std::vector<Var> parts{x};
    for (const Var& p : prior) {
        if (p.cols() != width)
            throw ShapeError("dense_gather: layer output width " + std::to_string(p.cols()) +
                             " differs from " + std::to_string(width));
        if (p.rows() != x.rows()) throw ShapeError("dense_gather: node counts differ");
        parts.push_back(p);
    }
    return concat_cols(parts);
}

Var graph_attention(Var transformed, const TypedAdjacency& adj, Var attn_proj, Var attn_vec,
                    double slope) {
    const std::size_t dh = transformed.cols();
    if (attn_proj.rows() != dh || attn_proj.cols() != dh)
        throw ShapeError("graph_attention: projection must be " + std::to_string(dh) + "x" +
                         std::to_string(dh));
    if (attn_vec.rows() != 1 || attn_vec.cols() != 2 * dh)
        throw ShapeError("graph_attention: attention vector must have width " +
                         std::to_string(2 * dh));
    if (adj.edge_count() == 0) throw InputError("graph_attention: empty neighborhoods");
    Var z = matmul_nt(transformed, attn_proj);
    Var left = matmul_nt(z, slice_cols(attn_vec, 0, dh));
    Var right = matmul_nt(z, slice_cols(attn_vec, dh, dh));
    Var score = add(gather_rows(left, adj.target), gather_rows(right, adj.source));
    return segment_softmax(leaky_relu(score, slope), adj.target, adj.nodes);
}

Var fixed_attention(Tape& tape, const TypedAdjacency& adj, AttentionMode mode) {
    Tensor alpha = Tensor::matrix(adj.edge_count(), 1, 1.0);
    if (mode == AttentionMode::uniform) {
        const auto deg = adj.in_degree();
        for (std::size_t e = 0; e < adj.edge_count(); ++e)
            alpha[e] = 1.0 / static_cast<double>(deg[adj.target[e]]);
    }
    return tape.constant(std::move(alpha));
}

std::vector<Var> directional_conv(Var g, const TypedAdjacency& adj, Var alpha,
                                  const std::vector<Var>& weights, const std::vector<Var>& biases) {
    const bool shared = weights.size() == 1;
    if (weights.size() != biases.size() || (!shared && weights.size() != adj.types))
        throw ShapeError("directional_conv: need one weight/bias per edge type (" +
                         std::to_string(adj.types) + ") or a single shared pair");
    if (alpha.rows() != adj.edge_count() || alpha.cols() != 1)
        throw ShapeError("directional_conv: attention has " + std::to_string(alpha.rows()) +
                         " rows for " + std::to_string(adj.edge_count()) + " edges");
    Tape& tape = *g.tape;
    std::vector<Var> out;
    std::optional<Var> shared_proj;
    for (std::size_t t = 0; t < adj.types; ++t) {
        const Var& w = weights[shared ? 0 : t];
        const Var& b = biases[shared ? 0 : t];
        if (adj.edge_count(t) == 0) {
            out.push_back(relu(add_row(tape.constant(Tensor::matrix(adj.nodes, w.rows())), b)));
            continue;
        }
        if (!shared_proj || !shared) shared_proj = matmul_nt(g, w);
        Var messages = gather_rows(*shared_proj, adj.sources_of(t));
        messages = mul_col(messages, gather_rows(alpha, adj.edge_ids_of(t)));
        Var summed = scatter_add_rows(messages, adj.targets_of(t), adj.nodes);
        out.push_back(relu(add_row(summed, b)));
    }
    return out;
}

Var direction_aggregate(const std::vector<Var>& per_type, Var weight, Var bias) {
    if (per_type.empty()) throw ShapeError("direction_aggregate: no per-type inputs");
    const std::size_t dh = per_type.front().cols();
    for (const Var& v : per_type)
        if (v.cols() != dh) throw ShapeError("direction_aggregate: per-type widths differ");
    if (weight.cols() != dh * per_type.size())
        throw ShapeError("direction_aggregate: weight expects " + std::to_string(weight.cols()) +
                         " inputs, got " + std::to_string(per_type.size()) + " x " +
                         std::to_string(dh));
    return relu(linear(per_type.size() == 1 ? per_type.front() : concat_cols(per_type), weight, bias));
}

Var direction_mean(const std::vector<Var>& per_type) {
    if (per_type.empty()) throw ShapeError("direction_mean: no per-type inputs");
    Var sum = per_type.front();
    for (std::size_t i = 1; i < per_type.size(); ++i) sum = add(sum, per_type[i]);
    return relu(scale(sum, 1.0 / static_cast<double>(per_type.size())));
}

Var dense_layer(Var g, const TypedAdjacency& adj, const DenseLayerVars& p,
                const LayerOptions& options, DenseLayerTrace* trace) {
    if (p.weight.empty()) throw ShapeError("dense_layer: no weights");
    for (const Var& w : p.weight)
        if (w.cols() != g.cols())
            throw ShapeError("dense_layer: weight expects input width " + std::to_string(w.cols()) +
                             ", got " + std::to_string(g.cols()));
    Var alpha;
    if (options.attention == AttentionMode::learned) {
        const std::size_t self = index_of(EdgeType::self);
        const Var& node_transform = p.weight.size() > self ? p.weight[self] : p.weight.front();
        alpha = graph_attention(matmul_nt(g, node_transform), adj, p.attn_proj, p.attn_vec,
                                options.slope);
    } else {
        alpha = fixed_attention(*g.tape, adj, options.attention);
    }
    auto per_type = directional_conv(g, adj, alpha, p.weight, p.bias);
    if (trace) {
        trace->input_width = g.cols();
        trace->alpha = alpha;
    }
    return options.direction_aggregation ? direction_aggregate(per_type, p.agg_weight, p.agg_bias)
                                         : direction_mean(per_type);
}

Var sublock_forward(Var x, const TypedAdjacency& adj, const std::vector<DenseLayerVars>& layers,
                    const LayerOptions& options, bool dense, std::vector<DenseLayerTrace>* traces) {
    if (layers.empty()) throw ShapeError("sublock_forward: no layers");
    std::vector<Var> outputs;
    for (const auto& layer : layers) {
        Var g = x;
        if (!outputs.empty()) g = dense ? dense_gather(x, outputs) : outputs.back();
        DenseLayerTrace trace;
        outputs.push_back(dense_layer(g, adj, layer, options, traces ? &trace : nullptr));
        if (traces) traces->push_back(trace);
    }
    return outputs.size() == 1 ? outputs.front() : concat_cols(outputs);
}

Var linear_combination(Var h_out, Var x, Var weight, Var bias) {
    if (h_out.cols() != x.cols())
        throw ShapeError("linear_combination: sub-block output width " +
                         std::to_string(h_out.cols()) + " differs from input width " +
                         std::to_string(x.cols()));
    return linear(add(h_out, x), weight, bias);
}

}  // namespace dcgcn
