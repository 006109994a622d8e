#pragma once
// Input graphs as read from text: AMR in a PENMAN subset and dependency trees
// in a four-column tabular form.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dcgcn {

struct GraphNode {
    std::string id;     // variable name, or a generated id for literals/tokens
    std::string token;  // concept, literal text or word form
};

struct GraphEdge {
    std::size_t source;
    std::string label;
    std::size_t target;
};

/// Directed graph of token-labeled nodes and relation-labeled edges.
struct LabeledGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    std::size_t root = 0;

    /// Throws InputError unless ids are unique, edge endpoints and the root
    /// exist, and there is at least one node.
    void validate() const;
};

enum class GraphFamily { amr, dependency };

GraphFamily parse_graph_family(std::string_view name);

/// PENMAN subset: (var / concept :role value ...), where a value is a nested
/// node, a "quoted literal", a bare constant, or a reference to a variable
/// defined elsewhere in the graph. Lines starting with '#' are comments.
LabeledGraph parse_penman(std::string_view text);

/// One token per line: index, word form, head index, relation, separated by
/// tabs (or whitespace). Ten-column CoNLL-U lines are also accepted.
LabeledGraph parse_dependency(std::string_view text);

/// A graph with its reference sentence.
struct RawExample {
    LabeledGraph graph;
    std::string target;
};

/// Corpus file: examples separated by blank lines; a "# ::snt <sentence>"
/// line carries the target, other '#' lines are ignored.
std::vector<RawExample> parse_corpus(std::string_view text, GraphFamily family);

std::vector<std::string> split_words(std::string_view sentence);

}  // namespace dcgcn
