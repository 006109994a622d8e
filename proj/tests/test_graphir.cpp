#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <deque>
#include <filesystem>
#include <set>

#include "dcgcn/errors.hpp"
#include "dcgcn/levi.hpp"
#include "dcgcn/vocab.hpp"
#include "support.hpp"

using namespace dcgcn;

namespace {

std::size_t incoming(const LabeledGraph& g, std::size_t node) {
    return static_cast<std::size_t>(
        std::count_if(g.edges.begin(), g.edges.end(), [&](const GraphEdge& e) { return e.target == node; }));
}

std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set(const std::vector<Edge>& edges) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> s;
    for (const Edge& e : edges) s.insert({e.source, e.target});
    return s;
}

}  // namespace

TEST_CASE("two-concept AMR") {
    const LabeledGraph g = parse_penman("(c / come-01 :ARG0 (a / and))");
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].label == ":ARG0");
    CHECK(g.nodes[g.root].token == "come-01");
    CHECK(g.nodes[g.edges[0].target].token == "and");
}

TEST_CASE("re-entrant variables map to one node") {
    const LabeledGraph g = parse_penman("(x / a :r1 (y / b) :r2 y)");
    REQUIRE(g.nodes.size() == 2);
    std::size_t b = g.nodes[0].token == "b" ? 0 : 1;
    CHECK(g.nodes[b].token == "b");
    CHECK(incoming(g, b) == 2);
}

TEST_CASE("references may precede the variable definition") {
    const LabeledGraph g = parse_penman("(x / a :r1 y :r2 (y / b))");
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 2);
}

TEST_CASE("literals, constants and comments") {
    const LabeledGraph g =
        parse_penman("# ::id 1\n(n / name :op1 \"New York\" :polarity - :quant 3)");
    REQUIRE(g.nodes.size() == 4);
    std::set<std::string> tokens;
    for (const auto& n : g.nodes) tokens.insert(n.token);
    CHECK(tokens == std::set<std::string>{"name", "New York", "-", "3"});
}

TEST_CASE("PENMAN errors carry a location") {
    CHECK_THROWS_AS(parse_penman(""), ParseError);
    CHECK_THROWS_AS(parse_penman("(a / b :r (c / d)"), ParseError);
    CHECK_THROWS_AS(parse_penman("(a / b :r)"), ParseError);
    CHECK_THROWS_AS(parse_penman("(a / b :r (a / c))"), ParseError);
    try {
        parse_penman("(a / b\n  :r q7)");
        FAIL("undefined variable accepted");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 6);
    }
    CHECK(parse_penman("(a / b :r zz9)").nodes.size() == 2);
}

TEST_CASE("two-token dependency tree") {
    const LabeledGraph g = parse_dependency("1 know 0 root\n2 you 1 nsubj\n");
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.nodes[g.root].token == "know");
    CHECK(g.nodes[g.edges[0].source].token == "know");
    CHECK(g.nodes[g.edges[0].target].token == "you");
    CHECK(g.edges[0].label == "nsubj");
}

TEST_CASE("CoNLL-U rows are accepted") {
    const LabeledGraph g = parse_dependency(
        "1\tDogs\tdog\tNOUN\tNNS\t_\t2\tnsubj\t_\t_\n2\tbark\tbark\tVERB\tVBP\t_\t0\troot\t_\t_\n");
    CHECK(g.nodes.size() == 2);
    CHECK(g.nodes[g.root].token == "bark");
}

TEST_CASE("dependency validation") {
    CHECK_THROWS_AS(parse_dependency("1 a 2 x\n2 b 1 y\n"), ParseError);
    CHECK_THROWS_AS(parse_dependency("1 a 0 root\n2 b 3 y\n3 c 2 z\n"), ParseError);
    CHECK_THROWS_AS(parse_dependency("1 a 0 root\n2 b 0 root\n"), ParseError);
    CHECK_THROWS_AS(parse_dependency("1 a 5 x\n"), ParseError);
    CHECK_THROWS_AS(parse_dependency(""), ParseError);
}

TEST_CASE("chain positions equal tree depth") {
    const LabeledGraph g = parse_dependency("1 a 0 root\n2 b 1 x\n3 c 2 x\n4 d 3 x\n5 e 4 x\n");
    const ExtendedLeviGraph levi = to_extended_levi(g);
    for (std::int32_t i = 0; i < 5; ++i) CHECK(levi.positions[static_cast<std::size_t>(i)] == i);
    // Edge node between depth k and k+1 sits at k+1.
    for (std::size_t k = 0; k < 4; ++k) CHECK(levi.positions[5 + k] == static_cast<std::int32_t>(k + 1));
    CHECK(levi.positions.back() == kGlobalPosition);
}

TEST_CASE("Levi counts for one edge") {
    const ExtendedLeviGraph levi = to_extended_levi(parse_penman("(c / come-01 :ARG0 (a / and))"));
    CHECK(levi.node_count() == 4);
    CHECK(levi.edges_of(EdgeType::default_).size() == 2);
    CHECK(levi.edges_of(EdgeType::reverse).size() == 2);
    CHECK(levi.edges_of(EdgeType::self).size() == 4);
    CHECK(levi.edges_of(EdgeType::global).size() == 3);
    CHECK(levi.labels == std::vector<std::string>{"come-01", "and", ":ARG0", "<gnode>"});
}

TEST_CASE("structural laws on random graphs") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const LabeledGraph g = testing::random_graph(rng, 1 + rng() % 10, rng() % 6);
        const bool sequential = i % 2 == 1;
        const ExtendedLeviGraph levi = to_extended_levi(g, {.sequential = sequential});
        const std::size_t V = g.nodes.size(), E = g.edges.size();
        CHECK_NOTHROW(check_invariants(levi));
        CHECK(levi.node_count() == V + E + 1);
        CHECK(levi.edges_of(EdgeType::forward).size() == (sequential ? V - 1 : 0));
        CHECK(levi.edges_of(EdgeType::backward).size() == (sequential ? V - 1 : 0));
        std::set<std::pair<std::uint32_t, std::uint32_t>> transposed;
        for (const Edge& e : levi.edges_of(EdgeType::default_)) transposed.insert({e.target, e.source});
        CHECK(edge_set(levi.edges_of(EdgeType::reverse)) == transposed);
        // Position sanity.
        CHECK(levi.positions[g.root] == 0);
        CHECK(levi.positions[static_cast<std::size_t>(levi.global_index)] == kGlobalPosition);
        std::vector<std::size_t> dist(levi.node_count(), SIZE_MAX);
        std::deque<std::size_t> q{g.root};
        dist[g.root] = 0;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop_front();
            for (const Edge& e : levi.edges_of(EdgeType::default_))
                if (e.source == u && dist[e.target] == SIZE_MAX) {
                    dist[e.target] = dist[u] + 1;
                    q.push_back(e.target);
                }
        }
        for (std::size_t n = 0; n + 1 < levi.node_count(); ++n)
            CHECK(levi.positions[n] == static_cast<std::int32_t>((dist[n] + 1) / 2));
    }
}

TEST_CASE("unreachable nodes get a sentinel position and a warning") {
    LabeledGraph g;
    g.nodes = {{"a", "x"}, {"b", "y"}, {"c", "z"}};
    g.edges = {{0, ":r", 1}};
    std::vector<std::string> warnings;
    const ExtendedLeviGraph levi = to_extended_levi(g, {}, &warnings);
    CHECK(levi.positions[2] == 2);
    CHECK(warnings.size() == 1);
}

TEST_CASE("removing the global node") {
    const ExtendedLeviGraph levi = to_extended_levi(parse_penman("(a / x :r (b / y))"));
    const ExtendedLeviGraph bare = without_global_node(levi);
    CHECK(bare.node_count() == 3);
    CHECK_FALSE(bare.has_global());
    CHECK(bare.edges_of(EdgeType::global).empty());
    CHECK(bare.edges_of(EdgeType::self).size() == 3);
}

TEST_CASE("JSONL round trip") {
    Rng rng(2);
    std::vector<ExtendedLeviGraph> all;
    for (int i = 0; i < 50; ++i) {
        const LabeledGraph g = testing::random_graph(rng, 1 + rng() % 8, rng() % 4);
        ExtendedLeviGraph levi = to_extended_levi(g, {.sequential = i % 3 == 0});
        assign_ids(levi, build_vocab({g}, {}, 1));
        levi.target = {5, 6, 7};
        CHECK(from_jsonl(to_jsonl(levi)) == levi);
        all.push_back(levi);
    }
    const auto path = std::filesystem::temp_directory_path() / "dcgcn_graphir_roundtrip.jsonl";
    write_jsonl_file(path.string(), all);
    CHECK(read_jsonl_file(path.string()) == all);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(from_jsonl("{\"tokens\": [1]"), InputError);
}

TEST_CASE("vocabulary") {
    SUBCASE("one pair, min count 1") {
        const LabeledGraph g = parse_penman("(c / come-01 :ARG0 (a / and))");
        const Vocabulary v = build_vocab({g}, {{"and", "came"}}, 1);
        CHECK(v.size() == 5 + 4);
        for (const char* t : {"come-01", "and", ":ARG0", "came"}) CHECK(v.contains(t));
        CHECK(v.token(Vocabulary::kGnode) == "<gnode>");
    }
    SUBCASE("min count 2 over singletons leaves only reserved tokens") {
        const Vocabulary v = build_vocab({parse_penman("(c / come-01 :ARG0 (a / and))")}, {{"x"}}, 2);
        CHECK(v.size() == 5);
        CHECK(v.id("come-01") == Vocabulary::kUnk);
    }
    SUBCASE("ids ordered by count then lexicographically, stable across builds") {
        const std::vector<LabeledGraph> gs = {parse_penman("(a / b :r (c / d))"), parse_penman("(x / d)")};
        const std::vector<std::vector<std::string>> ts = {{"d", "b", "z"}, {"a"}};
        const Vocabulary v1 = build_vocab(gs, ts, 1), v2 = build_vocab(gs, ts, 1);
        CHECK(v1.tokens() == v2.tokens());
        CHECK(v1.token(5) == "d");
        CHECK(v1.token(6) == "b");
        CHECK(v1.token(7) == ":r");
        CHECK(v1.token(8) == "a");
    }
    SUBCASE("encode, decode and save/load") {
        const Vocabulary v({"hello", "world"});
        CHECK(v.decode({Vocabulary::kBos, v.id("hello"), v.id("world"), Vocabulary::kEos, v.id("hello")}) ==
              "hello world");
        const auto path = std::filesystem::temp_directory_path() / "dcgcn_vocab_test.txt";
        v.save(path.string());
        CHECK(Vocabulary::load(path.string()).tokens() == v.tokens());
        std::filesystem::remove(path);
    }
}

TEST_CASE("corpus files") {
    const auto ex = parse_corpus(
        "# ::snt the boy wants\n(w / want-01 :ARG0 (b / boy))\n\n# ::snt go\n(g / go-02)\n",
        GraphFamily::amr);
    REQUIRE(ex.size() == 2);
    CHECK(ex[0].target == "the boy wants");
    CHECK(ex[0].graph.nodes.size() == 2);
    CHECK(ex[1].target == "go");
    CHECK(parse_graph_family("dep") == GraphFamily::dependency);
    CHECK_THROWS_AS(parse_graph_family("tree"), ConfigError);
}
