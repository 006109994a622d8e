#include "dcgcn/encoder.hpp"

#include <algorithm>
#include <sstream>

#include "dcgcn/errors.hpp"

namespace dcgcn {

using namespace ops;

std::string_view encoder_kind_name(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::dcgcn: return "dcgcn";
        case EncoderKind::gcn_rc: return "gcn-rc";
        case EncoderKind::gcn_rc_la: return "gcn-rc-la";
    }
    return "unknown";
}

EncoderKind parse_encoder_kind(std::string_view name) {
    for (auto k : {EncoderKind::dcgcn, EncoderKind::gcn_rc, EncoderKind::gcn_rc_la})
        if (encoder_kind_name(k) == name) return k;
    throw ConfigError("unknown encoder '" + std::string(name) + "' (dcgcn, gcn-rc, gcn-rc-la)");
}

bool Ablation::any() const {
    return linear_combination || global_node || direction_aggregation || graph_attention ||
           coverage || !dense_blocks.empty();
}

Ablation Ablation::parse(std::string_view list) {
    Ablation a;
    std::set<std::string> seen;
    std::stringstream in{std::string(list)};
    std::string item;
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty() || item == "none") continue;
        if (!seen.insert(item).second) throw ConfigError("ablation flag '" + item + "' given twice");
        if (item == "linear-combination") a.linear_combination = true;
        else if (item == "global-node") a.global_node = true;
        else if (item == "direction-aggregation") a.direction_aggregation = true;
        else if (item == "graph-attention") a.graph_attention = true;
        else if (item == "coverage") a.coverage = true;
        else if (item.rfind("dense-", 0) == 0) {
            const std::string num = item.substr(6);
            if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
                throw ConfigError("bad dense-block flag '" + item + "'");
            const int block = std::stoi(num);
            if (block < 1) throw ConfigError("dense-block indices start at 1");
            a.dense_blocks.insert(block);
        } else {
            throw ConfigError("unknown ablation flag '" + item + "'");
        }
    }
    return a;
}

std::string Ablation::to_string() const {
    std::vector<std::string> parts;
    if (linear_combination) parts.push_back("linear-combination");
    if (global_node) parts.push_back("global-node");
    if (direction_aggregation) parts.push_back("direction-aggregation");
    if (graph_attention) parts.push_back("graph-attention");
    if (coverage) parts.push_back("coverage");
    for (int b : dense_blocks) parts.push_back("dense-" + std::to_string(b));
    if (parts.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
    return out;
}

void EncoderConfig::validate(const Ablation& ablation) const {
    if (d <= 0) throw ConfigError("d must be positive");
    if (pos_dim < 0 || pos_dim >= d)
        throw ConfigError("position embedding width must be in [0, d)");
    if (edge_types != 4 && edge_types != 6)
        throw ConfigError("edge type count must be 4 (AMR) or 6 (dependency), got " +
                          std::to_string(edge_types));
    if (!(slope > 0.0)) throw ConfigError("attention slope must be positive");
    if (kind == EncoderKind::dcgcn) {
        if (blocks < 1) throw ConfigError("blocks must be >= 1");
        if (n < 1) throw ConfigError("n must be >= 1");
        if (m < 0) throw ConfigError("m must be >= 0");
        if (d % n != 0)
            throw ConfigError("d=" + std::to_string(d) + " is not divisible by n=" +
                              std::to_string(n));
        if (m > 0 && d % m != 0)
            throw ConfigError("d=" + std::to_string(d) + " is not divisible by m=" +
                              std::to_string(m));
        for (int b : ablation.dense_blocks)
            if (b < 1 || b > blocks)
                throw ConfigError("dense-" + std::to_string(b) + " names a block outside 1.." +
                                  std::to_string(blocks));
    } else {
        if (gcn_layers < 1) throw ConfigError("baseline encoders need gcn_layers >= 1");
        if (ablation.linear_combination || ablation.direction_aggregation ||
            ablation.graph_attention || !ablation.dense_blocks.empty())
            throw ConfigError("ablation flags " + ablation.to_string() +
                              " only apply to the dcgcn encoder");
    }
}

Encoder::Encoder(const EncoderConfig& config, const Ablation& ablation, std::size_t vocab_size,
                 ParamStore& params, Rng& rng)
    : config_(config), ablation_(ablation), vocab_size_(vocab_size) {
    config_.validate(ablation_);
    if (vocab_size == 0) throw ConfigError("empty vocabulary");
    const auto d = static_cast<std::size_t>(config_.d);
    const auto T = static_cast<std::size_t>(config_.edge_types);
    auto add = [&](const std::string& name, Shape shape, Init init) {
        params.add(name, std::move(shape), init, rng);
        return params.size() - 1;
    };

    word_emb_ = add("enc.word_emb", {vocab_size, static_cast<std::size_t>(config_.word_dim())},
                    Init::glorot);
    if (config_.pos_dim > 0)
        pos_emb_ = add("enc.pos_emb", {kPositionRows, static_cast<std::size_t>(config_.pos_dim)},
                       Init::glorot);

    if (config_.kind != EncoderKind::dcgcn) {
        for (int l = 0; l < config_.gcn_layers; ++l) {
            const std::string p = "enc.gcn.layer" + std::to_string(l);
            GcnLayerIds ids;
            ids.w_self = add(p + ".W_self", {d, d}, Init::glorot);
            ids.w_neighbor = add(p + ".W_neighbor", {d, d}, Init::glorot);
            ids.bias = add(p + ".b", {d}, Init::zeros);
            gcn_.push_back(ids);
        }
        if (config_.kind == EncoderKind::gcn_rc_la) {
            la_weight_ = add("enc.la.W", {d, d * static_cast<std::size_t>(config_.gcn_layers)},
                             Init::glorot);
            la_bias_ = add("enc.la.b", {d}, Init::zeros);
        }
        return;
    }

    for (int b = 0; b < config_.blocks; ++b) {
        const bool dense = !ablation_.dense_blocks.count(b + 1);
        std::vector<SubBlockIds> subs;
        for (int s = 0; s < 2; ++s) {
            const int layers = s == 0 ? config_.n : config_.m;
            if (layers == 0) continue;
            const auto dh = d / static_cast<std::size_t>(layers);
            SubBlockIds sub;
            for (int l = 0; l < layers; ++l) {
                const std::string p = "enc.block" + std::to_string(b) + ".sub" + std::to_string(s) +
                                      ".layer" + std::to_string(l);
                const std::size_t in = dense ? d + dh * static_cast<std::size_t>(l)
                                             : (l == 0 ? d : dh);
                DenseLayerIds ids;
                if (ablation_.direction_aggregation) {
                    ids.weight.push_back(add(p + ".W.shared", {dh, in}, Init::glorot));
                    ids.bias.push_back(add(p + ".b.shared", {dh}, Init::zeros));
                } else {
                    for (std::size_t t = 0; t < T; ++t) {
                        const std::string tn(edge_type_name(kAllEdgeTypes[t]));
                        ids.weight.push_back(add(p + ".W." + tn, {dh, in}, Init::glorot));
                        ids.bias.push_back(add(p + ".b." + tn, {dh}, Init::zeros));
                    }
                    ids.agg_weight = add(p + ".Wf", {dh, T * dh}, Init::glorot);
                    ids.agg_bias = add(p + ".bf", {dh}, Init::zeros);
                }
                if (!ablation_.graph_attention) {
                    ids.attn_proj = add(p + ".Wa", {dh, dh}, Init::glorot);
                    ids.attn_vec = add(p + ".a", {1, 2 * dh}, Init::glorot);
                }
                sub.layers.push_back(std::move(ids));
            }
            if (!ablation_.linear_combination) {
                const std::string p = "enc.block" + std::to_string(b) + ".comb" + std::to_string(s);
                sub.comb_weight = add(p + ".W", {d, d}, Init::glorot);
                sub.comb_bias = add(p + ".b", {d}, Init::zeros);
            }
            subs.push_back(std::move(sub));
        }
        blocks_.push_back(std::move(subs));
    }
    if (!ablation_.linear_combination) {
        final_weight_ = add("enc.final.W", {d, d * static_cast<std::size_t>(config_.blocks)},
                            Init::glorot);
        final_bias_ = add("enc.final.b", {d}, Init::zeros);
    }
}

Var Encoder::embed(Tape& tape, ParamStore& params, const std::vector<std::int32_t>& tokens,
                   const std::vector<std::int32_t>& positions) const {
    if (tokens.size() != positions.size())
        throw ShapeError("embed: " + std::to_string(tokens.size()) + " tokens but " +
                         std::to_string(positions.size()) + " positions");
    std::vector<Index> word_rows, pos_rows;
    word_rows.reserve(tokens.size());
    for (auto t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_)
            throw InputError("token id " + std::to_string(t) + " outside vocabulary of size " +
                             std::to_string(vocab_size_));
        word_rows.push_back(static_cast<Index>(t));
    }
    Var words = gather_rows(tape.param(params[word_emb_]), word_rows);
    if (config_.pos_dim == 0) return words;
    for (auto p : positions)
        pos_rows.push_back(static_cast<Index>(std::clamp(p, -1, kMaxPosition) + 1));
    return concat_cols({words, gather_rows(tape.param(params[pos_emb_]), pos_rows)});
}

DenseLayerVars Encoder::bind(Tape& tape, ParamStore& params, const DenseLayerIds& ids) const {
    DenseLayerVars v;
    for (auto i : ids.weight) v.weight.push_back(tape.param(params[i]));
    for (auto i : ids.bias) v.bias.push_back(tape.param(params[i]));
    if (!ablation_.direction_aggregation) {
        v.agg_weight = tape.param(params[ids.agg_weight]);
        v.agg_bias = tape.param(params[ids.agg_bias]);
    }
    if (!ablation_.graph_attention) {
        v.attn_proj = tape.param(params[ids.attn_proj]);
        v.attn_vec = tape.param(params[ids.attn_vec]);
    }
    return v;
}

Var Encoder::dcgcn_forward(Tape& tape, ParamStore& params, Var x0, const TypedAdjacency& adj,
                           EncoderTrace* trace) const {
    LayerOptions options;
    options.attention = ablation_.graph_attention ? AttentionMode::uniform : AttentionMode::learned;
    options.direction_aggregation = !ablation_.direction_aggregation;
    options.slope = config_.slope;

    Var x = x0;
    std::vector<Var> block_outputs;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const bool dense = !ablation_.dense_blocks.count(static_cast<int>(b) + 1);
        for (std::size_t s = 0; s < blocks_[b].size(); ++s) {
            const SubBlockIds& sub = blocks_[b][s];
            std::vector<DenseLayerVars> layers;
            for (const auto& ids : sub.layers) layers.push_back(bind(tape, params, ids));
            std::vector<DenseLayerTrace> traces;
            Var h_out = sublock_forward(x, adj, layers, options, dense, trace ? &traces : nullptr);
            if (trace)
                for (std::size_t l = 0; l < traces.size(); ++l)
                    trace->layers.push_back({static_cast<int>(b), static_cast<int>(s),
                                             static_cast<int>(l), traces[l]});
            x = ablation_.linear_combination
                    ? h_out
                    : linear_combination(h_out, x, tape.param(params[sub.comb_weight]),
                                         tape.param(params[sub.comb_bias]));
        }
        block_outputs.push_back(x);
    }
    if (ablation_.linear_combination) return block_outputs.back();
    Var merged = block_outputs.size() == 1 ? block_outputs.front() : concat_cols(block_outputs);
    Var residual = block_outputs.size() == 1
                       ? x0
                       : concat_cols(std::vector<Var>(block_outputs.size(), x0));
    return linear(add(merged, residual), tape.param(params[final_weight_]),
                  tape.param(params[final_bias_]));
}

Var Encoder::gcn_forward(Tape& tape, ParamStore& params, Var x, const TypedAdjacency& adj) const {
    std::vector<std::size_t> weight_class(adj.types, 1);
    if (adj.types > index_of(EdgeType::self)) weight_class[index_of(EdgeType::self)] = 0;
    std::optional<Var> scale;
    if (config_.gcn_mean) scale = mean_scale(tape, adj);
    std::vector<Var> outputs;
    Var h = x;
    for (const auto& ids : gcn_) {
        h = gcn_residual(h, adj, {tape.param(params[ids.w_self]), tape.param(params[ids.w_neighbor])},
                         tape.param(params[ids.bias]), weight_class, Activation::relu, scale);
        outputs.push_back(h);
    }
    if (config_.kind == EncoderKind::gcn_rc) return h;
    return layer_aggregate(outputs, tape.param(params[la_weight_]), tape.param(params[la_bias_]));
}

Var Encoder::encode_features(Tape& tape, ParamStore& params, Var x, const TypedAdjacency& adj,
                             EncoderTrace* trace) const {
    if (x.cols() != static_cast<std::size_t>(config_.d) || x.rows() != adj.nodes)
        throw ShapeError("encoder input must be " + std::to_string(adj.nodes) + " x " +
                         std::to_string(config_.d) + ", got " + shape_string(x.value().shape()));
    if (adj.types != static_cast<std::size_t>(config_.edge_types))
        throw InputError("adjacency has " + std::to_string(adj.types) +
                         " edge types, encoder expects " + std::to_string(config_.edge_types));
    return config_.kind == EncoderKind::dcgcn ? dcgcn_forward(tape, params, x, adj, trace)
                                              : gcn_forward(tape, params, x, adj);
}

Var Encoder::encode(Tape& tape, ParamStore& params, const std::vector<std::int32_t>& tokens,
                    const std::vector<std::int32_t>& positions, const TypedAdjacency& adj,
                    EncoderTrace* trace) const {
    return encode_features(tape, params, embed(tape, params, tokens, positions), adj, trace);
}

}  // namespace dcgcn
