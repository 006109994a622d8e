#pragma once
// Extended Levi graphs: every labeled edge becomes a node, every node gets a
// self loop, original edges get reverse twins, and a global node points at
// every other node. Dependency inputs additionally chain consecutive tokens
// with forward/backward edges.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dcgcn/graph.hpp"

namespace dcgcn {

class Vocabulary;

enum class EdgeType : std::uint8_t { default_, reverse, self, global, forward, backward };

inline constexpr std::size_t kEdgeTypeCount = 6;
inline constexpr std::size_t kAmrEdgeTypes = 4;
inline constexpr std::size_t kDependencyEdgeTypes = 6;
inline constexpr std::array<EdgeType, kEdgeTypeCount> kAllEdgeTypes = {
    EdgeType::default_, EdgeType::reverse,  EdgeType::self,
    EdgeType::global,   EdgeType::forward, EdgeType::backward};

std::string_view edge_type_name(EdgeType t);
EdgeType parse_edge_type(std::string_view name);
inline std::size_t index_of(EdgeType t) { return static_cast<std::size_t>(t); }

struct Edge {
    std::uint32_t source;
    std::uint32_t target;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline constexpr std::int32_t kGlobalPosition = -1;

struct ExtendedLeviGraph {
    /// Vocabulary ids: original nodes, then edge-label nodes, then the global
    /// node. Empty until ids are assigned.
    std::vector<std::int32_t> tokens;
    /// Token strings in the same order (not serialized).
    std::vector<std::string> labels;
    std::array<std::vector<Edge>, kEdgeTypeCount> edges;
    std::vector<std::int32_t> positions;
    /// Index of the global node, or -1 when the graph has none.
    std::int32_t global_index = -1;
    /// Reference sentence ids (without <bos>/<eos>).
    std::vector<std::int32_t> target;

    std::size_t node_count() const { return positions.size(); }
    const std::vector<Edge>& edges_of(EdgeType t) const { return edges[index_of(t)]; }
    std::vector<Edge>& edges_of(EdgeType t) { return edges[index_of(t)]; }
    bool has_global() const { return global_index >= 0; }

    friend bool operator==(const ExtendedLeviGraph& a, const ExtendedLeviGraph& b) {
        return a.tokens == b.tokens && a.edges == b.edges && a.positions == b.positions &&
               a.global_index == b.global_index && a.target == b.target;
    }
};

struct LeviOptions {
    bool sequential = false;  // forward/backward chains between original tokens
    bool global_node = true;
};

/// Structure and positions; tokens stay empty until assign_ids(). Position of
/// a node = ceil(d / 2) where d is its breadth-first distance from the root
/// along default edges, so original nodes get their hop count in the source
/// graph; the global node gets -1. Nodes unreachable from the root get
/// (largest reachable position + 1) and a message in `warnings`.
ExtendedLeviGraph to_extended_levi(const LabeledGraph& graph, const LeviOptions& options = {},
                                   std::vector<std::string>* warnings = nullptr);

/// Token used for an edge-label node: the label with a ':' prefix.
std::string edge_label_token(std::string_view label);

void assign_ids(ExtendedLeviGraph& levi, const Vocabulary& vocab);

/// The same graph minus its global node and global edges.
ExtendedLeviGraph without_global_node(const ExtendedLeviGraph& levi);

/// Structural invariants (self edge per node, global fan-out, reverse
/// closure, index ranges, positions). Throws InputError naming the first
/// violation.
void check_invariants(const ExtendedLeviGraph& levi);

/// One JSON object, no trailing newline.
std::string to_jsonl(const ExtendedLeviGraph& levi);
ExtendedLeviGraph from_jsonl(std::string_view line);

std::vector<ExtendedLeviGraph> read_jsonl_file(const std::string& path);
void write_jsonl_file(const std::string& path, const std::vector<ExtendedLeviGraph>& graphs);

}  // namespace dcgcn
