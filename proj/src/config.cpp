#include "dcgcn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dcgcn/errors.hpp"

namespace dcgcn {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty())
        throw ConfigError("bad value '" + std::string(value) + "' for " + std::string(key));
    return out;
}

int parse_int(std::string_view key, std::string_view value) { return parse_number<int>(key, value); }

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw ConfigError("bad boolean '" + std::string(value) + "' for " + std::string(key));
}

bool parse_gcn_norm(std::string_view value) {
    if (value == "mean") return true;
    if (value == "sum") return false;
    throw ConfigError("bad gcn_norm '" + std::string(value) + "' (mean | sum)");
}

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

}  // namespace

std::string_view graph_family_name(GraphFamily family) {
    return family == GraphFamily::amr ? "amr" : "dep";
}

void Config::set_graph(GraphFamily family) {
    graph = family;
    model.encoder.edge_types =
        static_cast<int>(family == GraphFamily::amr ? kAmrEdgeTypes : kDependencyEdgeTypes);
}

void Config::set(std::string_view key, std::string_view value) {
    auto& enc = model.encoder;
    if (key == "encoder") enc.kind = parse_encoder_kind(value);
    else if (key == "blocks") enc.blocks = parse_int(key, value);
    else if (key == "n") enc.n = parse_int(key, value);
    else if (key == "m") enc.m = parse_int(key, value);
    else if (key == "d") enc.d = parse_int(key, value);
    else if (key == "pos_dim") enc.pos_dim = parse_int(key, value);
    else if (key == "slope") enc.slope = parse_number<double>(key, value);
    else if (key == "layers") enc.gcn_layers = parse_int(key, value);
    else if (key == "gcn_norm") enc.gcn_mean = parse_gcn_norm(value);
    else if (key == "graph_type") set_graph(parse_graph_family(value));
    else if (key == "batch") train.batch = parse_number<std::size_t>(key, value);
    else if (key == "lr") train.learning_rate = parse_number<double>(key, value);
    else if (key == "max_epochs") train.max_epochs = parse_int(key, value);
    else if (key == "patience") train.patience = parse_int(key, value);
    else if (key == "seed") train.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "clip") train.clip_norm = parse_number<double>(key, value);
    else if (key == "min_count") min_count = parse_int(key, value);
    else if (key == "beam") beam = parse_number<std::size_t>(key, value);
    else if (key == "length_norm") length_normalize = parse_bool(key, value);
    else if (key == "ablation") model.ablation = Ablation::parse(value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void Config::validate() const {
    model.validate();
    train.validate();
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (beam < 1) throw ConfigError("beam must be >= 1");
}

std::string Config::to_string() const {
    const auto& enc = model.encoder;
    std::ostringstream s;
    s << "encoder=" << encoder_kind_name(enc.kind) << '\n'
      << "blocks=" << enc.blocks << '\n'
      << "n=" << enc.n << '\n'
      << "m=" << enc.m << '\n'
      << "d=" << enc.d << '\n'
      << "pos_dim=" << enc.pos_dim << '\n'
      << "slope=" << format_double(enc.slope) << '\n'
      << "layers=" << enc.gcn_layers << '\n'
      << "gcn_norm=" << (enc.gcn_mean ? "mean" : "sum") << '\n'
      << "graph_type=" << graph_family_name(graph) << '\n'
      << "batch=" << train.batch << '\n'
      << "lr=" << format_double(train.learning_rate) << '\n'
      << "max_epochs=" << train.max_epochs << '\n'
      << "patience=" << train.patience << '\n'
      << "seed=" << train.seed << '\n'
      << "clip=" << format_double(train.clip_norm) << '\n'
      << "min_count=" << min_count << '\n'
      << "beam=" << beam << '\n'
      << "length_norm=" << (length_normalize ? 1 : 0) << '\n'
      << "ablation=" << model.ablation.to_string() << '\n';
    return s.str();
}

Config Config::parse(std::string_view text) {
    Config c;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view l = trim(line);
        if (l.empty() || l.front() == '#') continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
        try {
            c.set(trim(l.substr(0, eq)), trim(l.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

}  // namespace dcgcn
