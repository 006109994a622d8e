#pragma once
// Line-oriented key=value run configuration. Unknown keys are errors.
//
//   encoder=dcgcn        dcgcn | gcn-rc | gcn-rc-la
//   blocks=4  n=6  m=3  d=360  pos_dim=60  slope=0.2
//   layers=0             depth of the baseline GCN stack
//   gcn_norm=mean        mean | sum aggregation in the baseline stack
//   graph_type=amr       amr | dep (sets 4 or 6 edge types)
//   batch=16  lr=0.0003  max_epochs=30  patience=3  seed=1  clip=5
//   min_count=1  beam=10  length_norm=1
//   ablation=none        comma-separated ablation flags

#include <filesystem>
#include <string>
#include <string_view>

#include "dcgcn/graph.hpp"
#include "dcgcn/model.hpp"
#include "dcgcn/training.hpp"

namespace dcgcn {

struct Config {
    ModelConfig model;
    GraphFamily graph = GraphFamily::amr;
    TrainOptions train;
    int min_count = 1;
    std::size_t beam = 10;
    bool length_normalize = true;

    void set_graph(GraphFamily family);
    void set(std::string_view key, std::string_view value);
    void validate() const;
    std::string to_string() const;

    /// Lines are key=value; blank lines and '#' comments are skipped.
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);
};

std::string_view graph_family_name(GraphFamily family);

}  // namespace dcgcn
