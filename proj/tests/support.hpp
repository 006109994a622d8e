#pragma once
// Shared fixtures: random graphs, a synthetic tree-linearization corpus and
// small model configurations.

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dcgcn/graph.hpp"
#include "dcgcn/levi.hpp"
#include "dcgcn/model.hpp"
#include "dcgcn/vocab.hpp"

namespace dcgcn::testing {

inline const char* const kRelations[] = {"ARG0", "ARG1", "ARG2", "mod", "time"};

/// Random graph: node 0 is the root, nodes 1.. hang off an earlier node (so
/// everything is reachable), then `extra` further edges between random nodes.
inline LabeledGraph random_graph(Rng& rng, std::size_t nodes, std::size_t extra,
                                 std::size_t concepts = 12) {
    LabeledGraph g;
    for (std::size_t v = 0; v < nodes; ++v)
        g.nodes.push_back({"v" + std::to_string(v), "c" + std::to_string(rng() % concepts)});
    for (std::size_t v = 1; v < nodes; ++v)
        g.edges.push_back({static_cast<std::size_t>(rng() % v), kRelations[rng() % 5], v});
    for (std::size_t e = 0; e < extra; ++e)
        g.edges.push_back({static_cast<std::size_t>(rng() % nodes), kRelations[rng() % 5],
                           static_cast<std::size_t>(rng() % nodes)});
    return g;
}

/// Tree whose target is its preorder concept sequence. Siblings carry
/// distinct relations and are visited in relation order, so the target is a
/// function of the graph.
struct TreeExample {
    LabeledGraph graph;
    std::vector<std::string> target;
};

inline TreeExample random_tree_example(Rng& rng, std::size_t min_nodes, std::size_t max_nodes,
                                       std::size_t concepts = 16) {
    constexpr std::size_t kLabels = 4;
    TreeExample ex;
    const std::size_t n = min_nodes + rng() % (max_nodes - min_nodes + 1);
    std::vector<std::array<std::optional<std::size_t>, kLabels>> children(n);
    for (std::size_t v = 0; v < n; ++v)
        ex.graph.nodes.push_back({"v" + std::to_string(v), "c" + std::to_string(rng() % concepts)});
    for (std::size_t v = 1; v < n; ++v) {
        std::size_t p, r;
        do {
            p = rng() % v;
            r = rng() % kLabels;
        } while (children[p][r]);
        children[p][r] = v;
        ex.graph.edges.push_back({p, kRelations[r], v});
    }
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        ex.target.push_back(ex.graph.nodes[v].token);
        for (auto it = children[v].rbegin(); it != children[v].rend(); ++it)
            if (*it) stack.push_back(**it);
    }
    return ex;
}

struct Corpus {
    Vocabulary vocab;
    std::vector<ExtendedLeviGraph> examples;
};

inline Corpus tree_corpus(std::uint64_t seed, std::size_t count, std::size_t min_nodes,
                          std::size_t max_nodes) {
    Rng rng(seed);
    std::vector<TreeExample> raw;
    for (std::size_t i = 0; i < count; ++i)
        raw.push_back(random_tree_example(rng, min_nodes, max_nodes));
    std::vector<LabeledGraph> graphs;
    std::vector<std::vector<std::string>> targets;
    for (const auto& ex : raw) {
        graphs.push_back(ex.graph);
        targets.push_back(ex.target);
    }
    Corpus c{build_vocab(graphs, targets, 1), {}};
    for (const auto& ex : raw) {
        ExtendedLeviGraph levi = to_extended_levi(ex.graph);
        assign_ids(levi, c.vocab);
        levi.target = c.vocab.encode(ex.target);
        c.examples.push_back(std::move(levi));
    }
    return c;
}

inline ModelConfig tiny_config() {
    ModelConfig c;
    c.encoder.blocks = 1;
    c.encoder.n = 2;
    c.encoder.m = 1;
    c.encoder.d = 12;
    c.encoder.pos_dim = 4;
    return c;
}

inline ModelConfig small_config() {
    ModelConfig c;
    c.encoder.blocks = 2;
    c.encoder.n = 6;
    c.encoder.m = 3;
    c.encoder.d = 18;
    c.encoder.pos_dim = 6;
    return c;
}

/// Relabels the nodes of a Levi graph: node i moves to perm[i].
inline ExtendedLeviGraph permute(const ExtendedLeviGraph& g, const std::vector<std::size_t>& perm) {
    ExtendedLeviGraph out = g;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        out.tokens[perm[i]] = g.tokens[i];
        out.positions[perm[i]] = g.positions[i];
        if (!g.labels.empty()) out.labels[perm[i]] = g.labels[i];
    }
    for (std::size_t t = 0; t < kEdgeTypeCount; ++t)
        for (auto& e : out.edges[t]) {
            e.source = static_cast<std::uint32_t>(perm[e.source]);
            e.target = static_cast<std::uint32_t>(perm[e.target]);
        }
    if (g.global_index >= 0) out.global_index = static_cast<std::int32_t>(perm[g.global_index]);
    return out;
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

}  // namespace dcgcn::testing
