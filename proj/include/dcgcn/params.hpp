#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcgcn/tape.hpp"

namespace dcgcn {

using Rng = std::mt19937_64;

enum class Init {
    glorot,  // uniform in +-sqrt(6 / (fan_in + fan_out))
    zeros,
};

/// Named, ordered collection of trainable parameters. Names are stable and
/// double as checkpoint keys; insertion order is the checkpoint order.
class ParamStore {
   public:
    ParamStore() = default;
    ParamStore(const ParamStore& other);
    ParamStore& operator=(const ParamStore& other);
    ParamStore(ParamStore&&) noexcept = default;
    ParamStore& operator=(ParamStore&&) noexcept = default;

    Parameter& add(const std::string& name, Shape shape, Init init, Rng& rng);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    void zero_grad();
    /// Copy values (not gradients) from a store with identical names and shapes.
    void assign_values(const ParamStore& other);

    /// Checkpoint: "DCGCN1" then per parameter: u32 name length, name bytes,
    /// u32 rank, u64 per dimension, row-major float64 values, all little endian.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    /// Overwrite values from a checkpoint; names, order and shapes must match
    /// this store exactly.
    void load(std::istream& in);
    void load(const std::filesystem::path& path);

   private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dcgcn
