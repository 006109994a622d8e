#include "dcgcn/model.hpp"

#include <algorithm>

#include "dcgcn/errors.hpp"
#include "dcgcn/vocab.hpp"

namespace dcgcn {

using namespace ops;

DecoderConfig ModelConfig::decoder() const {
    DecoderConfig d;
    d.memory_dim = encoder.d;
    d.hidden = encoder.d;
    d.embedding = encoder.d;
    d.attention = encoder.d;
    d.coverage = !ablation.coverage;
    return d;
}

Batch make_batch(const std::vector<const ExtendedLeviGraph*>& graphs, std::size_t edge_types,
                 bool global_node) {
    if (graphs.empty()) throw InputError("empty batch");
    Batch b;
    std::vector<TypedAdjacency> parts;
    parts.reserve(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const ExtendedLeviGraph* src = graphs[i];
        ExtendedLeviGraph stripped;
        if (!global_node && src->has_global()) {
            stripped = without_global_node(*src);
            src = &stripped;
        }
        const ExtendedLeviGraph& g = *src;
        if (global_node && !g.has_global())
            throw InputError("graph " + std::to_string(i) + " has no global node");
        if (g.tokens.size() != g.node_count())
            throw InputError("graph " + std::to_string(i) + " has no token ids assigned");
        const std::size_t base = b.tokens.size();
        b.node_offset.push_back(base);
        b.tokens.insert(b.tokens.end(), g.tokens.begin(), g.tokens.end());
        b.positions.insert(b.positions.end(), g.positions.begin(), g.positions.end());
        if (g.has_global()) b.global_nodes.push_back(static_cast<Index>(base + static_cast<std::size_t>(g.global_index)));
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            if (static_cast<std::int32_t>(v) == g.global_index) continue;
            b.memory_nodes.push_back(static_cast<Index>(base + v));
            b.memory_segment.push_back(static_cast<Index>(i));
        }
        parts.push_back(build_adjacency(g, edge_types));
        b.targets.push_back(g.target);
    }
    b.adjacency = merge_adjacency(parts);
    return b;
}

Model::Model(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed)
    : config_(config),
      vocab_size_(vocab_size),
      rng_(seed),
      encoder_(config.encoder, config.ablation, vocab_size, params_, rng_),
      decoder_(config.decoder(), vocab_size, params_, rng_) {}

Batch Model::batch(const std::vector<const ExtendedLeviGraph*>& graphs) const {
    return make_batch(graphs, static_cast<std::size_t>(config_.encoder.edge_types),
                      !config_.ablation.global_node);
}

Encoded Model::encode(Tape& tape, const Batch& batch, EncoderTrace* trace) {
    for (auto t : batch.tokens)
        if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_)
            throw InputError("token id " + std::to_string(t) + " outside vocabulary of size " +
                             std::to_string(vocab_size_));
    Encoded e;
    e.nodes = encoder_.encode(tape, params_, batch.tokens, batch.positions, batch.adjacency, trace);
    Var memory = gather_rows(e.nodes, batch.memory_nodes);
    if (config_.ablation.global_node) {
        std::vector<std::size_t> count(batch.size(), 0);
        for (auto s : batch.memory_segment) ++count[s];
        Tensor inv = Tensor::matrix(batch.size(), 1);
        for (std::size_t i = 0; i < batch.size(); ++i) inv[i] = 1.0 / static_cast<double>(count[i]);
        e.source = mul_col(scatter_add_rows(memory, batch.memory_segment, batch.size()),
                           tape.constant(std::move(inv)));
    } else {
        if (batch.global_nodes.size() != batch.size())
            throw InputError("batch is missing global nodes");
        e.source = gather_rows(e.nodes, batch.global_nodes);
    }
    e.memory = decoder_.prepare_memory(tape, params_, memory, batch.memory_segment, batch.size());
    return e;
}

namespace {

std::vector<std::int32_t> strip_markers(std::vector<std::int32_t> target) {
    if (!target.empty() && target.front() == Vocabulary::kBos) target.erase(target.begin());
    if (!target.empty() && target.back() == Vocabulary::kEos) target.pop_back();
    return target;
}

}  // namespace

LossOutput Model::loss(Tape& tape, const Batch& batch) {
    const std::size_t B = batch.size();
    std::vector<std::vector<std::int32_t>> inputs(B), outputs(B);
    std::size_t steps = 0;
    LossOutput out;
    for (std::size_t b = 0; b < B; ++b) {
        auto words = strip_markers(batch.targets[b]);
        if (words.empty()) throw InputError("empty target sequence in batch position " + std::to_string(b));
        inputs[b].push_back(Vocabulary::kBos);
        inputs[b].insert(inputs[b].end(), words.begin(), words.end());
        outputs[b] = words;
        outputs[b].push_back(Vocabulary::kEos);
        out.lengths.push_back(outputs[b].size());
        out.tokens += outputs[b].size();
        steps = std::max(steps, outputs[b].size());
    }
    Encoded enc = encode(tape, batch);
    DecoderVars state = decoder_.init_state(tape, params_, enc.source, batch.memory_nodes.size());
    Var total;
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<std::int32_t> prev(B), gold(B);
        for (std::size_t b = 0; b < B; ++b) {
            prev[b] = t < inputs[b].size() ? inputs[b][t] : Vocabulary::kPad;
            gold[b] = t < outputs[b].size() ? outputs[b][t] : -1;
        }
        StepOutput s = decoder_.step(tape, params_, state, prev, enc.memory);
        Var picked = pick(log_softmax_rows(s.logits), gold);
        total = t == 0 ? picked : add(total, picked);
        state = s.state;
    }
    out.example_nll = scale(total, -1.0);
    out.loss = scale(sum_all(total), -1.0 / static_cast<double>(out.tokens));
    return out;
}

namespace {

DecoderSnapshot snapshot(const DecoderVars& s) {
    return {s.h1.value(), s.c1.value(), s.h2.value(), s.c2.value(), s.context.value(),
            s.coverage.value()};
}

}  // namespace

SourceEncoding Model::prepare(const ExtendedLeviGraph& graph) {
    Tape tape(Tape::Mode::inference);
    Batch b = batch({&graph});
    Encoded enc = encode(tape, b);
    DecoderVars init = decoder_.init_state(tape, params_, enc.source, b.memory_nodes.size());
    SourceEncoding s;
    s.memory = enc.memory.memory.value();
    s.projected = enc.memory.projected.value();
    s.initial = snapshot(init);
    s.levi_nodes = graph.node_count();
    return s;
}

std::vector<double> Model::step(const SourceEncoding& source, const DecoderSnapshot& state,
                                std::int32_t token, DecoderSnapshot& next) {
    Tape tape(Tape::Mode::inference);
    AttentionMemory memory;
    memory.memory = tape.constant(source.memory);
    memory.projected = tape.constant(source.projected);
    memory.segment.assign(source.memory.rows(), 0);
    memory.batch = 1;
    DecoderVars vars{tape.constant(state.h1),      tape.constant(state.c1),
                     tape.constant(state.h2),      tape.constant(state.c2),
                     tape.constant(state.context), tape.constant(state.coverage)};
    StepOutput s = decoder_.step(tape, params_, vars, {token}, memory);
    next = snapshot(s.state);
    const Tensor& lp = log_softmax_rows(s.logits).value();
    return lp.storage();
}

}  // namespace dcgcn
