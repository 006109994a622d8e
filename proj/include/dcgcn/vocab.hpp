#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dcgcn/graph.hpp"

namespace dcgcn {

/// Token <-> id bijection shared by encoder and decoder. Ids 0..4 are
/// reserved for <pad>, <unk>, <bos>, <eos>, <gnode>.
class Vocabulary {
   public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kBos = 2;
    static constexpr std::int32_t kEos = 3;
    static constexpr std::int32_t kGnode = 4;
    static constexpr std::int32_t kReserved = 5;
    static constexpr std::string_view kGnodeToken = "<gnode>";

    Vocabulary();
    /// Reserved tokens followed by `tokens` in order.
    explicit Vocabulary(const std::vector<std::string>& tokens);

    std::int32_t id(std::string_view token) const;  // <unk> for unknown tokens
    bool contains(std::string_view token) const;
    const std::string& token(std::int32_t id) const;
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::vector<std::int32_t> encode(const std::vector<std::string>& words) const;
    /// Space-joined tokens, stopping at <eos> and skipping <bos>/<pad>.
    std::string decode(const std::vector<std::int32_t>& ids) const;

    /// One token per line, line number (0-based) = id.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

   private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> ids_;
};

/// Shared vocabulary over node tokens, ':'-prefixed edge labels and target
/// words. Tokens seen fewer than `min_count` times are left out (they map to
/// <unk>). Order: descending count, then lexicographic.
Vocabulary build_vocab(const std::vector<LabeledGraph>& graphs,
                       const std::vector<std::vector<std::string>>& targets, int min_count);

}  // namespace dcgcn
