#pragma once

#include "knet/data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace knet {

enum class TaskKind { Regression, Classification, Generation, Density };

std::string task_name(TaskKind t);
TaskKind task_from_name(const std::string& name);

struct DataConfig {
    std::string source;  // friedman | one of gen2d | csv | idx | density
    int n = 1000;
    double noise_sd = 0.0;
    double test_fraction = 0.2;
    std::string path;         // csv / idx images (relative to --data-dir unless absolute)
    std::string labels_path;  // idx labels
    std::string test_path;
    std::string test_labels_path;
    std::string target_column = "y";
    std::string density;  // density-matching target name
};

// One experiment: what to build, how to train it, what to train it on.
// Parsed from JSON; every validation failure is a config_error naming the
// offending key.
struct ExperimentConfig {
    TaskKind task = TaskKind::Regression;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    Method method = Method::ForwardEuler;
    DeviceKind device = DeviceKind::ReLU2;
    std::vector<LayerSpec> layers;  // topologies and integrator configs; params unset
    std::vector<int> input_nodes;   // empty: first data-dim nodes
    std::vector<int> readout_nodes;  // empty: task default
    // When the last layer is a projection topology, the aggregation node
    // range [first, last) — the default classification readout.
    std::optional<std::pair<int, int>> proj_range;
    TrainConfig train;
    DataConfig data;
};

ExperimentConfig parse_experiment(const std::string& json_text);
ExperimentConfig load_experiment(const std::string& path);

// The fully resolved config as JSON, written next to run outputs for
// provenance.
std::string experiment_to_json(const ExperimentConfig& cfg);

// Materialized training inputs: a split for data tasks, a density handle for
// matching tasks.
struct ResolvedData {
    SplitDataset split;
    DensityFn density;
};
ResolvedData resolve_data(const ExperimentConfig& cfg, const std::string& data_dir);

// Assemble the net for the experiment, filling input/readout defaults from
// the data shape. Parameters are sized but zero; call init_params to seed
// them.
NetSpec build_net(const ExperimentConfig& cfg, size_t data_dim, int n_outputs);

}  // namespace knet
