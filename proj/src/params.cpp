#include "dcgcn/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dcgcn/errors.hpp"

namespace dcgcn {
namespace {

constexpr char kMagic[] = "DCGCN1";
constexpr std::size_t kMagicLen = 6;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw InputError(std::string("checkpoint truncated while reading ") + what);
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

ParamStore::ParamStore(const ParamStore& other) { *this = other; }

ParamStore& ParamStore::operator=(const ParamStore& other) {
    if (this == &other) return *this;
    params_.clear();
    index_ = other.index_;
    params_.reserve(other.params_.size());
    for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
    return *this;
}

Parameter& ParamStore::add(const std::string& name, Shape shape, Init init, Rng& rng) {
    if (contains(name)) throw ConfigError("duplicate parameter name " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Tensor(shape);
    if (init == Init::glorot) {
        const double fan_out = static_cast<double>(shape.size() == 2 ? shape[0] : 1);
        const double fan_in = static_cast<double>(shape.back());
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : p->value.storage()) v = dist(rng);
    }
    p->grad = Tensor(shape);
    index_.emplace(name, params_.size());
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter " + name);
    return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter " + name);
    return *params_[it->second];
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

void ParamStore::assign_values(const ParamStore& other) {
    if (other.size() != size()) throw ConfigError("parameter stores differ in size");
    for (std::size_t i = 0; i < size(); ++i) {
        if (params_[i]->name != other[i].name || params_[i]->value.shape() != other[i].value.shape())
            throw ConfigError("parameter stores differ at " + params_[i]->name);
        params_[i]->value = other[i].value;
    }
}

void ParamStore::save(std::ostream& out) const {
    out.write(kMagic, kMagicLen);
    for (const auto& p : params_) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
        for (auto d : p->value.shape()) write_le<std::uint64_t>(out, d);
        for (double v : p->value.values()) write_le<double>(out, v);
    }
    if (!out) throw InputError("failed writing checkpoint");
}

void ParamStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open checkpoint for writing: " + path.string());
    save(out);
}

void ParamStore::load(std::istream& in) {
    char magic[kMagicLen];
    if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
        throw InputError("not a DCGCN1 checkpoint");
    for (const auto& p : params_) {
        const auto len = read_le<std::uint32_t>(in, "name length");
        if (len > 4096) throw InputError("checkpoint name length out of range");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw InputError("checkpoint truncated in name");
        if (name != p->name)
            throw InputError("checkpoint parameter '" + name + "' where '" + p->name +
                             "' was expected");
        const auto rank = read_le<std::uint32_t>(in, "rank");
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i)
            shape.push_back(static_cast<std::size_t>(read_le<std::uint64_t>(in, "shape")));
        if (shape != p->value.shape())
            throw InputError("checkpoint shape " + shape_string(shape) + " for " + name +
                             " does not match configured " + shape_string(p->value.shape()));
        for (double& v : p->value.storage()) v = read_le<double>(in, "values");
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw InputError("checkpoint has parameters beyond the configured architecture");
}

void ParamStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint: " + path.string());
    load(in);
}

}  // namespace dcgcn
