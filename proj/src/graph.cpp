#include "dcgcn/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dcgcn/errors.hpp"

namespace dcgcn {

void LabeledGraph::validate() const {
    if (nodes.empty()) throw InputError("graph has no nodes");
    std::unordered_set<std::string> ids;
    for (const auto& n : nodes)
        if (!ids.insert(n.id).second) throw InputError("duplicate node id " + n.id);
    if (root >= nodes.size()) throw InputError("graph root is not a node");
    for (const auto& e : edges)
        if (e.source >= nodes.size() || e.target >= nodes.size())
            throw InputError("edge " + e.label + " has an endpoint outside the graph");
}

GraphFamily parse_graph_family(std::string_view name) {
    if (name == "amr") return GraphFamily::amr;
    if (name == "dep" || name == "dependency") return GraphFamily::dependency;
    throw ConfigError("unknown graph type '" + std::string(name) + "' (expected amr or dep)");
}

std::vector<std::string> split_words(std::string_view sentence) {
    std::vector<std::string> out;
    std::istringstream in{std::string(sentence)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

namespace {

// ---- PENMAN ----

struct Token {
    enum class Kind { lparen, rparen, slash, role, string, symbol, end } kind;
    std::string text;
    int line;
    int column;
};

class PenmanLexer {
   public:
    explicit PenmanLexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_space();
        const int line = line_, col = col_;
        if (pos_ >= text_.size()) return {Token::Kind::end, "", line, col};
        const char c = text_[pos_];
        if (c == '(') return advance_single(Token::Kind::lparen, line, col);
        if (c == ')') return advance_single(Token::Kind::rparen, line, col);
        if (c == '/') return advance_single(Token::Kind::slash, line, col);
        if (c == '"') {
            bump();
            std::string s;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) bump();
                s += text_[pos_];
                bump();
            }
            if (pos_ >= text_.size()) throw ParseError("unterminated string literal", line, col);
            bump();
            return {Token::Kind::string, s, line, col};
        }
        std::string s;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != '"' &&
               text_[pos_] != '/') {
            s += text_[pos_];
            bump();
        }
        if (s.empty()) throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        if (s.front() == ':') {
            if (s.size() == 1) throw ParseError("empty role name", line, col);
            return {Token::Kind::role, s, line, col};
        }
        return {Token::Kind::symbol, s, line, col};
    }

   private:
    Token advance_single(Token::Kind kind, int line, int col) {
        std::string s(1, text_[pos_]);
        bump();
        return {kind, s, line, col};
    }

    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else if (c == '#' && col_ == 1) {
                while (pos_ < text_.size() && text_[pos_] != '\n') bump();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

bool looks_like_variable(const std::string& s) {
    static const std::regex pattern("^[a-z][0-9]*$");
    return std::regex_match(s, pattern);
}

class PenmanParser {
   public:
    explicit PenmanParser(std::string_view text) : lex_(text) { advance(); }

    LabeledGraph parse() {
        if (cur_.kind == Token::Kind::end) throw ParseError("empty input", cur_.line, cur_.column);
        graph_.root = parse_node();
        if (cur_.kind != Token::Kind::end)
            throw ParseError("trailing content '" + cur_.text + "' after graph", cur_.line,
                             cur_.column);
        for (const auto& ref : pending_) {
            auto it = vars_.find(ref.name);
            if (it == vars_.end())
                throw ParseError("undefined variable '" + ref.name + "'", ref.line, ref.column);
            graph_.edges[ref.edge].target = it->second;
        }
        graph_.validate();
        return std::move(graph_);
    }

   private:
    struct PendingRef {
        std::size_t edge;
        std::string name;
        int line;
        int column;
    };

    void advance() { cur_ = lex_.next(); }

    Token expect(Token::Kind kind, const char* what) {
        if (cur_.kind != kind) {
            if (cur_.kind == Token::Kind::end)
                throw ParseError(std::string("unbalanced parentheses: expected ") + what +
                                     " before end of input",
                                 cur_.line, cur_.column);
            throw ParseError(std::string("expected ") + what + ", found '" + cur_.text + "'",
                             cur_.line, cur_.column);
        }
        Token t = cur_;
        advance();
        return t;
    }

    std::size_t add_node(std::string id, std::string token) {
        graph_.nodes.push_back({std::move(id), std::move(token)});
        return graph_.nodes.size() - 1;
    }

    std::size_t parse_node() {
        expect(Token::Kind::lparen, "'('");
        const Token var = expect(Token::Kind::symbol, "variable");
        if (vars_.count(var.text))
            throw ParseError("variable '" + var.text + "' defined twice", var.line, var.column);
        expect(Token::Kind::slash, "'/'");
        if (cur_.kind != Token::Kind::symbol && cur_.kind != Token::Kind::string)
            throw ParseError("expected concept after '/'", cur_.line, cur_.column);
        const std::string concept_name = cur_.text;
        advance();
        const std::size_t self = add_node(var.text, concept_name);
        vars_.emplace(var.text, self);
        while (cur_.kind == Token::Kind::role) {
            const std::string role = cur_.text;
            advance();
            const std::size_t edge = graph_.edges.size();
            graph_.edges.push_back({self, role, 0});
            switch (cur_.kind) {
                case Token::Kind::lparen:
                    graph_.edges[edge].target = parse_node();
                    break;
                case Token::Kind::string:
                    graph_.edges[edge].target = add_node(fresh_id(), cur_.text);
                    advance();
                    break;
                case Token::Kind::symbol: {
                    const Token sym = cur_;
                    advance();
                    if (auto it = vars_.find(sym.text); it != vars_.end()) {
                        graph_.edges[edge].target = it->second;
                    } else if (looks_like_variable(sym.text)) {
                        pending_.push_back({edge, sym.text, sym.line, sym.column});
                    } else {
                        graph_.edges[edge].target = add_node(fresh_id(), sym.text);
                    }
                    break;
                }
                case Token::Kind::end:
                    throw ParseError("unbalanced parentheses: role " + role + " has no value",
                                     cur_.line, cur_.column);
                default:
                    throw ParseError("role " + role + " has no value", cur_.line, cur_.column);
            }
        }
        expect(Token::Kind::rparen, "')'");
        return self;
    }

    std::string fresh_id() { return "_" + std::to_string(++literal_count_); }

    PenmanLexer lex_;
    Token cur_{Token::Kind::end, "", 1, 1};
    LabeledGraph graph_;
    std::unordered_map<std::string, std::size_t> vars_;
    std::vector<PendingRef> pending_;
    int literal_count_ = 0;
};

// ---- dependency ----

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    if (line.find('\t') != std::string::npos) {
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            out.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        return out;
    }
    return split_words(line);
}

std::optional<long> to_int(const std::string& s) {
    long v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) return std::nullopt;
    return v;
}

}  // namespace

LabeledGraph parse_penman(std::string_view text) { return PenmanParser(text).parse(); }

LabeledGraph parse_dependency(std::string_view text) {
    struct Row {
        std::string form;
        long head;
        std::string rel;
        int line;
    };
    std::vector<Row> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
        const auto f = split_fields(line);
        std::size_t head_col = 2, rel_col = 3;
        if (f.size() >= 8) {
            head_col = 6;
            rel_col = 7;
        } else if (f.size() != 4) {
            throw ParseError("expected 4 fields (index, word, head, relation), found " +
                                 std::to_string(f.size()),
                             lineno, 1);
        }
        const auto index = to_int(f[0]);
        if (!index) {
            if (f[0].find_first_of("-.") != std::string::npos) continue;  // CoNLL-U multiword / empty nodes
            throw ParseError("token index '" + f[0] + "' is not an integer", lineno, 1);
        }
        if (*index != static_cast<long>(rows.size()) + 1)
            throw ParseError("token index " + f[0] + " out of sequence", lineno, 1);
        const auto head = to_int(f[head_col]);
        if (!head) throw ParseError("head '" + f[head_col] + "' is not an integer", lineno, 1);
        rows.push_back({f[1], *head, f[rel_col], lineno});
    }
    if (rows.empty()) throw ParseError("empty dependency tree", 1, 1);

    const long n = static_cast<long>(rows.size());
    LabeledGraph g;
    std::optional<std::size_t> root;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        g.nodes.push_back({std::to_string(i + 1), rows[i].form});
        if (rows[i].head < 0 || rows[i].head > n)
            throw ParseError("head index " + std::to_string(rows[i].head) + " out of range 0.." +
                                 std::to_string(n),
                             rows[i].line, 1);
        if (rows[i].head == 0) {
            if (root) throw ParseError("multiple roots in dependency tree", rows[i].line, 1);
            root = i;
        }
    }
    if (!root) throw ParseError("dependency tree has no root (head 0)", rows.front().line, 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        // Walking up from any token must reach the root within n steps.
        long cur = static_cast<long>(i) + 1;
        for (long steps = 0; cur != 0; ++steps) {
            if (steps > n)
                throw ParseError("cycle in head assignment through token " + std::to_string(i + 1),
                                 rows[i].line, 1);
            cur = rows[static_cast<std::size_t>(cur - 1)].head;
        }
    }
    g.root = *root;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].head != 0)
            g.edges.push_back({static_cast<std::size_t>(rows[i].head - 1), rows[i].rel, i});
    g.validate();
    return g;
}

std::vector<RawExample> parse_corpus(std::string_view text, GraphFamily family) {
    std::vector<RawExample> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    std::string body;
    std::string target;
    int body_start = 0;
    bool have_target = false;

    auto flush = [&] {
        if (body.find_first_not_of(" \t\r\n") == std::string::npos) {
            if (have_target)
                throw ParseError("sentence without a graph", body_start ? body_start : lineno, 1);
            body.clear();
            return;
        }
        RawExample ex;
        try {
            ex.graph = family == GraphFamily::amr ? parse_penman(body) : parse_dependency(body);
        } catch (const ParseError& e) {
            throw ParseError(std::string("example ") + std::to_string(out.size() + 1) + ": " +
                                 e.what(),
                             body_start + e.line() - 1, e.column());
        }
        ex.target = target;
        out.push_back(std::move(ex));
        body.clear();
        target.clear();
        have_target = false;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            flush();
            body_start = 0;
            continue;
        }
        if (body_start == 0) body_start = lineno;
        if (line.rfind("# ::snt", 0) == 0) {
            target = line.size() > 7 ? line.substr(7) : "";
            const auto first = target.find_first_not_of(' ');
            target = first == std::string::npos ? "" : target.substr(first);
            have_target = true;
            body += '\n';  // keep line numbering aligned
            continue;
        }
        if (line[0] == '#') {
            body += '\n';
            continue;
        }
        body += line;
        body += '\n';
    }
    flush();
    return out;
}

}  // namespace dcgcn
