#include "dcgcn/levi.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dcgcn/errors.hpp"
#include "dcgcn/vocab.hpp"

namespace dcgcn {

using nlohmann::json;

std::string_view edge_type_name(EdgeType t) {
    switch (t) {
        case EdgeType::default_: return "default";
        case EdgeType::reverse: return "reverse";
        case EdgeType::self: return "self";
        case EdgeType::global: return "global";
        case EdgeType::forward: return "forward";
        case EdgeType::backward: return "backward";
    }
    return "unknown";
}

EdgeType parse_edge_type(std::string_view name) {
    for (EdgeType t : kAllEdgeTypes)
        if (edge_type_name(t) == name) return t;
    throw InputError("unknown edge type '" + std::string(name) + "'");
}

std::string edge_label_token(std::string_view label) {
    if (!label.empty() && label.front() == ':') return std::string(label);
    return ":" + std::string(label);
}

ExtendedLeviGraph to_extended_levi(const LabeledGraph& graph, const LeviOptions& options,
                                   std::vector<std::string>* warnings) {
    graph.validate();
    const auto v_count = static_cast<std::uint32_t>(graph.nodes.size());
    const auto e_count = static_cast<std::uint32_t>(graph.edges.size());
    const std::uint32_t n = v_count + e_count + (options.global_node ? 1 : 0);

    ExtendedLeviGraph levi;
    levi.labels.reserve(n);
    for (const auto& node : graph.nodes) levi.labels.push_back(node.token);
    for (const auto& edge : graph.edges) levi.labels.push_back(edge_label_token(edge.label));

    auto& dflt = levi.edges_of(EdgeType::default_);
    auto& rev = levi.edges_of(EdgeType::reverse);
    for (std::uint32_t k = 0; k < e_count; ++k) {
        const auto u = static_cast<std::uint32_t>(graph.edges[k].source);
        const auto v = static_cast<std::uint32_t>(graph.edges[k].target);
        const std::uint32_t e = v_count + k;
        dflt.push_back({u, e});
        dflt.push_back({e, v});
        rev.push_back({e, u});
        rev.push_back({v, e});
    }
    if (options.sequential) {
        for (std::uint32_t i = 0; i + 1 < v_count; ++i) {
            levi.edges_of(EdgeType::forward).push_back({i, i + 1});
            levi.edges_of(EdgeType::backward).push_back({i + 1, i});
        }
    }
    if (options.global_node) {
        levi.global_index = static_cast<std::int32_t>(n - 1);
        levi.labels.push_back(std::string(Vocabulary::kGnodeToken));
        for (std::uint32_t x = 0; x + 1 < n; ++x)
            levi.edges_of(EdgeType::global).push_back({n - 1, x});
    }
    for (std::uint32_t i = 0; i < n; ++i) levi.edges_of(EdgeType::self).push_back({i, i});

    // Breadth-first distances along default edges from the root.
    std::vector<std::vector<std::uint32_t>> out(n);
    for (const Edge& e : dflt) out[e.source].push_back(e.target);
    constexpr std::int32_t kUnseen = -2;
    std::vector<std::int32_t> dist(n, kUnseen);
    std::deque<std::uint32_t> queue;
    dist[graph.root] = 0;
    queue.push_back(static_cast<std::uint32_t>(graph.root));
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        for (auto w : out[u])
            if (dist[w] == kUnseen) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
    }
    levi.positions.assign(n, 0);
    std::int32_t max_pos = 0;
    const std::uint32_t structural = v_count + e_count;
    for (std::uint32_t i = 0; i < structural; ++i)
        if (dist[i] != kUnseen) {
            levi.positions[i] = (dist[i] + 1) / 2;
            max_pos = std::max(max_pos, levi.positions[i]);
        }
    for (std::uint32_t i = 0; i < structural; ++i)
        if (dist[i] == kUnseen) {
            levi.positions[i] = max_pos + 1;
            if (warnings)
                warnings->push_back("node " + std::to_string(i) + " ('" + levi.labels[i] +
                                    "') is unreachable from the root; position set to " +
                                    std::to_string(max_pos + 1));
        }
    if (options.global_node) levi.positions[n - 1] = kGlobalPosition;
    return levi;
}

void assign_ids(ExtendedLeviGraph& levi, const Vocabulary& vocab) {
    levi.tokens.clear();
    levi.tokens.reserve(levi.labels.size());
    for (const auto& label : levi.labels) levi.tokens.push_back(vocab.id(label));
}

ExtendedLeviGraph without_global_node(const ExtendedLeviGraph& levi) {
    if (!levi.has_global()) return levi;
    const auto g = static_cast<std::uint32_t>(levi.global_index);
    if (g + 1 != levi.node_count())
        throw InputError("global node must be the last node to be removed");
    ExtendedLeviGraph out = levi;
    out.global_index = -1;
    if (!out.tokens.empty()) out.tokens.pop_back();
    if (!out.labels.empty()) out.labels.pop_back();
    out.positions.pop_back();
    out.edges_of(EdgeType::global).clear();
    for (auto& list : out.edges)
        std::erase_if(list, [g](const Edge& e) { return e.source == g || e.target == g; });
    return out;
}

namespace {

std::vector<Edge> transposed_sorted(const std::vector<Edge>& edges) {
    std::vector<Edge> t;
    t.reserve(edges.size());
    for (const Edge& e : edges) t.push_back({e.target, e.source});
    std::sort(t.begin(), t.end());
    return t;
}

std::vector<Edge> sorted(std::vector<Edge> edges) {
    std::sort(edges.begin(), edges.end());
    return edges;
}

}  // namespace

void check_invariants(const ExtendedLeviGraph& levi) {
    const std::size_t n = levi.node_count();
    if (n == 0) throw InputError("Levi graph has no nodes");
    if (!levi.tokens.empty() && levi.tokens.size() != n)
        throw InputError("token count " + std::to_string(levi.tokens.size()) +
                         " differs from position count " + std::to_string(n));
    for (auto tok : levi.tokens)
        if (tok < 0) throw InputError("negative token id");
    for (EdgeType t : kAllEdgeTypes)
        for (const Edge& e : levi.edges_of(t))
            if (e.source >= n || e.target >= n)
                throw InputError(std::string(edge_type_name(t)) + " edge outside node range");

    std::vector<int> self_count(n, 0);
    for (const Edge& e : levi.edges_of(EdgeType::self)) {
        if (e.source != e.target) throw InputError("self edge joins two different nodes");
        ++self_count[e.source];
    }
    for (std::size_t i = 0; i < n; ++i)
        if (self_count[i] != 1)
            throw InputError("node " + std::to_string(i) + " has " +
                             std::to_string(self_count[i]) + " self edges");

    if (levi.has_global()) {
        const auto g = static_cast<std::size_t>(levi.global_index);
        if (g >= n) throw InputError("global index outside node range");
        if (levi.positions[g] != kGlobalPosition)
            throw InputError("global node position must be -1");
        std::vector<int> reached(n, 0);
        for (const Edge& e : levi.edges_of(EdgeType::global)) {
            if (e.source != g) throw InputError("global edge does not start at the global node");
            ++reached[e.target];
        }
        for (std::size_t i = 0; i < n; ++i)
            if (i != g && reached[i] != 1)
                throw InputError("global node must reach node " + std::to_string(i) +
                                 " exactly once");
        if (reached[g] != 0) throw InputError("global edge loops on the global node");
    } else if (!levi.edges_of(EdgeType::global).empty()) {
        throw InputError("global edges present without a global node");
    }
    for (std::size_t i = 0; i < n; ++i)
        if (static_cast<std::int32_t>(i) != levi.global_index && levi.positions[i] < 0)
            throw InputError("negative position for non-global node " + std::to_string(i));

    if (sorted(levi.edges_of(EdgeType::reverse)) !=
        transposed_sorted(levi.edges_of(EdgeType::default_)))
        throw InputError("reverse edges are not the transpose of default edges");
    if (sorted(levi.edges_of(EdgeType::backward)) !=
        transposed_sorted(levi.edges_of(EdgeType::forward)))
        throw InputError("backward edges are not the transpose of forward edges");
}

std::string to_jsonl(const ExtendedLeviGraph& levi) {
    json j;
    j["tokens"] = levi.tokens;
    json edges = json::object();
    for (EdgeType t : kAllEdgeTypes) {
        json list = json::array();
        for (const Edge& e : levi.edges_of(t)) list.push_back({e.source, e.target});
        edges[std::string(edge_type_name(t))] = std::move(list);
    }
    j["edges"] = std::move(edges);
    j["pos"] = levi.positions;
    j["global_index"] = levi.global_index;
    j["target"] = levi.target;
    return j.dump();
}

ExtendedLeviGraph from_jsonl(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSONL record: ") + e.what());
    }
    if (!j.is_object()) throw InputError("JSONL record is not an object");
    static const std::vector<std::string> keys = {"tokens", "edges", "pos", "global_index",
                                                  "target"};
    for (const auto& [k, _] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw InputError("unknown JSONL key '" + k + "'");
    for (const auto& k : keys)
        if (!j.contains(k)) throw InputError("JSONL record lacks '" + k + "'");
    ExtendedLeviGraph levi;
    try {
        levi.tokens = j.at("tokens").get<std::vector<std::int32_t>>();
        levi.positions = j.at("pos").get<std::vector<std::int32_t>>();
        levi.global_index = j.at("global_index").get<std::int32_t>();
        levi.target = j.at("target").get<std::vector<std::int32_t>>();
        const json& edges = j.at("edges");
        if (!edges.is_object()) throw InputError("'edges' must be an object");
        for (const auto& [name, list] : edges.items()) {
            auto& dst = levi.edges_of(parse_edge_type(name));
            for (const auto& pair : list) {
                if (!pair.is_array() || pair.size() != 2)
                    throw InputError("edge entries must be [source, target] pairs");
                dst.push_back({pair[0].get<std::uint32_t>(), pair[1].get<std::uint32_t>()});
            }
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("bad JSONL field: ") + e.what());
    }
    if (levi.tokens.size() != levi.positions.size())
        throw InputError("'tokens' and 'pos' lengths differ");
    check_invariants(levi);
    return levi;
}

std::vector<ExtendedLeviGraph> read_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<ExtendedLeviGraph> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(from_jsonl(line));
        } catch (const InputError& e) {
            throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl_file(const std::string& path, const std::vector<ExtendedLeviGraph>& graphs) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (const auto& g : graphs) out << to_jsonl(g) << '\n';
}

}  // namespace dcgcn
