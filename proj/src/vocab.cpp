#include "dcgcn/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "dcgcn/errors.hpp"
#include "dcgcn/levi.hpp"

namespace dcgcn {
namespace {
const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<bos>", "<eos>", "<gnode>"};
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
    tokens_ = kReservedTokens;
    for (const auto& t : tokens) {
        if (std::find(kReservedTokens.begin(), kReservedTokens.end(), t) != kReservedTokens.end())
            continue;
        tokens_.push_back(t);
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        if (!ids_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second)
            throw InputError("duplicate vocabulary token '" + tokens_[i] + "'");
}

std::int32_t Vocabulary::id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return ids_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(tokens_.size()));
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode(const std::vector<std::string>& words) const {
    std::vector<std::int32_t> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(id(w));
    return out;
}

std::string Vocabulary::decode(const std::vector<std::int32_t>& ids) const {
    std::string out;
    for (auto id : ids) {
        if (id == kEos) break;
        if (id == kBos || id == kPad) continue;
        if (!out.empty()) out += ' ';
        out += token(id);
    }
    return out;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write vocabulary " + path);
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < kReservedTokens.size() ||
        !std::equal(kReservedTokens.begin(), kReservedTokens.end(), lines.begin()))
        throw InputError("vocabulary " + path + " does not start with the reserved tokens");
    return Vocabulary(std::vector<std::string>(lines.begin() + 5, lines.end()));
}

Vocabulary build_vocab(const std::vector<LabeledGraph>& graphs,
                       const std::vector<std::vector<std::string>>& targets, int min_count) {
    if (graphs.empty() && targets.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, long> counts;
    for (const auto& g : graphs) {
        for (const auto& n : g.nodes) ++counts[n.token];
        for (const auto& e : g.edges) ++counts[edge_label_token(e.label)];
    }
    for (const auto& sentence : targets)
        for (const auto& w : sentence) ++counts[w];
    std::vector<std::pair<std::string, long>> entries;
    for (const auto& [tok, c] : counts)
        if (c >= min_count) entries.emplace_back(tok, c);
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(entries.size());
    for (auto& e : entries) tokens.push_back(std::move(e.first));
    return Vocabulary(tokens);
}

}  // namespace dcgcn
