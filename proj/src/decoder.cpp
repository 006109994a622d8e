#include "dcgcn/decoder.hpp"

#include "dcgcn/errors.hpp"

namespace dcgcn {

using namespace ops;

Decoder::Decoder(const DecoderConfig& config, std::size_t vocab_size, ParamStore& params, Rng& rng)
    : config_(config), vocab_size_(vocab_size) {
    if (config.memory_dim <= 0 || config.hidden <= 0 || config.embedding <= 0 ||
        config.attention <= 0)
        throw ConfigError("decoder widths must be positive");
    if (vocab_size == 0) throw ConfigError("empty vocabulary");
    const auto H = static_cast<std::size_t>(config.hidden);
    const auto D = static_cast<std::size_t>(config.memory_dim);
    const auto E = static_cast<std::size_t>(config.embedding);
    const auto A = static_cast<std::size_t>(config.attention);
    auto add = [&](const std::string& name, Shape shape, Init init) {
        params.add(name, std::move(shape), init, rng);
        return params.size() - 1;
    };
    embedding_ = add("dec.emb", {vocab_size, E}, Init::glorot);
    init_h_w_ = add("dec.init_h.W", {H, D}, Init::glorot);
    init_h_b_ = add("dec.init_h.b", {H}, Init::zeros);
    init_c_w_ = add("dec.init_c.W", {H, D}, Init::glorot);
    init_c_b_ = add("dec.init_c.b", {H}, Init::zeros);
    for (std::size_t l = 0; l < 2; ++l) {
        const std::string p = "dec.lstm" + std::to_string(l);
        const std::size_t in = l == 0 ? E + D : H;
        layers_[l].w_input = add(p + ".W", {4 * H, in}, Init::glorot);
        layers_[l].w_hidden = add(p + ".U", {4 * H, H}, Init::glorot);
        layers_[l].bias = add(p + ".b", {4 * H}, Init::zeros);
    }
    attn_query_ = add("dec.attn.U", {A, H}, Init::glorot);
    attn_memory_ = add("dec.attn.V", {A, D}, Init::glorot);
    attn_score_ = add("dec.attn.w", {1, A}, Init::glorot);
    if (config.coverage) attn_coverage_ = add("dec.attn.c", {1, A}, Init::glorot);
    out_w_ = add("dec.out.W", {vocab_size, H + D}, Init::glorot);
    out_b_ = add("dec.out.b", {vocab_size}, Init::zeros);
}

AttentionMemory Decoder::prepare_memory(Tape& tape, ParamStore& params, Var memory,
                                        std::vector<Index> segment, std::size_t batch) const {
    if (memory.cols() != static_cast<std::size_t>(config_.memory_dim))
        throw ShapeError("attention memory width " + std::to_string(memory.cols()) + ", expected " +
                         std::to_string(config_.memory_dim));
    if (segment.size() != memory.rows())
        throw ShapeError("memory has " + std::to_string(memory.rows()) + " rows but " +
                         std::to_string(segment.size()) + " segment ids");
    std::vector<std::size_t> count(batch, 0);
    for (auto s : segment) {
        if (s >= batch) throw InputError("memory segment id out of range");
        ++count[s];
    }
    for (std::size_t b = 0; b < batch; ++b)
        if (count[b] == 0) throw InputError("empty attention memory for sequence " + std::to_string(b));
    AttentionMemory m;
    m.memory = memory;
    m.projected = linear(memory, tape.param(params[attn_memory_]));
    m.segment = std::move(segment);
    m.batch = batch;
    return m;
}

DecoderVars Decoder::init_state(Tape& tape, ParamStore& params, Var source,
                                std::size_t memory_rows) const {
    if (source.cols() != static_cast<std::size_t>(config_.memory_dim))
        throw ShapeError("decoder init source width " + std::to_string(source.cols()) +
                         ", expected " + std::to_string(config_.memory_dim));
    DecoderVars s;
    s.h1 = ops::tanh(linear(source, tape.param(params[init_h_w_]), tape.param(params[init_h_b_])));
    s.c1 = ops::tanh(linear(source, tape.param(params[init_c_w_]), tape.param(params[init_c_b_])));
    s.h2 = s.h1;
    s.c2 = s.c1;
    s.context = tape.constant(Tensor::matrix(source.rows(), static_cast<std::size_t>(config_.memory_dim)));
    s.coverage = tape.constant(Tensor::matrix(memory_rows, 1));
    return s;
}

AttentionOutput Decoder::attend(Tape& tape, ParamStore& params, Var query, Var coverage,
                                const AttentionMemory& memory) const {
    if (query.rows() != memory.batch)
        throw ShapeError("attention query has " + std::to_string(query.rows()) + " rows for a batch of " +
                         std::to_string(memory.batch));
    Var q = gather_rows(linear(query, tape.param(params[attn_query_])), memory.segment);
    Var pre = add(q, memory.projected);
    if (config_.coverage) pre = add(pre, matmul(coverage, tape.param(params[attn_coverage_])));
    Var score = matmul_nt(ops::tanh(pre), tape.param(params[attn_score_]));
    AttentionOutput out;
    out.alpha = segment_softmax(score, memory.segment, memory.batch);
    out.context = scatter_add_rows(mul_col(memory.memory, out.alpha), memory.segment, memory.batch);
    out.coverage = add(coverage, out.alpha);
    return out;
}

std::pair<Var, Var> Decoder::lstm(Tape& tape, ParamStore& params, const LstmIds& ids, Var x, Var h,
                                  Var c) const {
    const auto H = static_cast<std::size_t>(config_.hidden);
    Var gates = add(linear(x, tape.param(params[ids.w_input]), tape.param(params[ids.bias])),
                    linear(h, tape.param(params[ids.w_hidden])));
    Var i = sigmoid(slice_cols(gates, 0, H));
    Var f = sigmoid(slice_cols(gates, H, H));
    Var o = sigmoid(slice_cols(gates, 2 * H, H));
    Var g = ops::tanh(slice_cols(gates, 3 * H, H));
    Var c_next = add(mul(f, c), mul(i, g));
    return {mul(o, ops::tanh(c_next)), c_next};
}

StepOutput Decoder::step(Tape& tape, ParamStore& params, const DecoderVars& state,
                         const std::vector<std::int32_t>& previous,
                         const AttentionMemory& memory) const {
    if (previous.size() != state.h1.rows())
        throw ShapeError("step: " + std::to_string(previous.size()) + " tokens for " +
                         std::to_string(state.h1.rows()) + " sequences");
    std::vector<Index> rows;
    rows.reserve(previous.size());
    for (auto t : previous) {
        if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_)
            throw InputError("token id " + std::to_string(t) + " outside vocabulary of size " +
                             std::to_string(vocab_size_));
        rows.push_back(static_cast<Index>(t));
    }
    Var emb = gather_rows(tape.param(params[embedding_]), rows);
    Var x = concat_cols({emb, state.context});
    StepOutput out;
    std::tie(out.state.h1, out.state.c1) = lstm(tape, params, layers_[0], x, state.h1, state.c1);
    std::tie(out.state.h2, out.state.c2) =
        lstm(tape, params, layers_[1], out.state.h1, state.h2, state.c2);
    AttentionOutput att = attend(tape, params, out.state.h2, state.coverage, memory);
    out.state.context = att.context;
    out.state.coverage = att.coverage;
    out.alpha = att.alpha;
    out.logits = linear(concat_cols({out.state.h2, att.context}), tape.param(params[out_w_]),
                        tape.param(params[out_b_]));
    return out;
}

}  // namespace dcgcn
