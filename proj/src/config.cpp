#include "knet/config.hpp"

#include "knet/errors.hpp"
#include "knet/fsio.hpp"
#include "knet/topology.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <numeric>

namespace knet {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw config_error(key + ": " + what);
}

Topology parse_topo(const json& jt, const std::string& key, std::optional<std::pair<int, int>>* proj_range) {
    const std::string kind = jt.value("kind", "");
    const int repeat = jt.value("repeat", 1);
    try {
        if (kind == "fc") return fc_topo(jt.at("nodes").get<int>(), repeat);
        if (kind == "ne")
            return ne_topo(jt.value("channels", 1), jt.at("width").get<int>(),
                           jt.at("height").get<int>(), jt.at("kernel").get<int>(), repeat);
        if (kind == "proj") {
            const int c = jt.value("channels", 1);
            const int w = jt.at("width").get<int>();
            const int h = jt.at("height").get<int>();
            const int p = jt.at("proj_nodes").get<int>();
            Topology topo = proj_topo(c, w, h, jt.at("kernel").get<int>(), p, repeat,
                                      jt.value("proj_repeat", 1));
            if (proj_range) *proj_range = {c * w * h, c * w * h + p};
            return topo;
        }
    } catch (const json::exception& e) {
        bad(key, std::string("missing or malformed field (") + e.what() + ")");
    } catch (const std::invalid_argument& e) {
        bad(key, e.what());
    }
    bad(key + ".kind", "unknown topology kind '" + kind + "'");
}

bool is_gen2d(const std::string& name) {
    const auto& names = gen2d_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

std::string task_name(TaskKind t) {
    switch (t) {
        case TaskKind::Regression: return "regression";
        case TaskKind::Classification: return "classification";
        case TaskKind::Generation: return "generation";
        case TaskKind::Density: return "density";
    }
    throw std::invalid_argument("unknown task kind");
}

TaskKind task_from_name(const std::string& name) {
    if (name == "regression") return TaskKind::Regression;
    if (name == "classification") return TaskKind::Classification;
    if (name == "generation") return TaskKind::Generation;
    if (name == "density") return TaskKind::Density;
    throw config_error("task: unknown task '" + name + "'");
}

ExperimentConfig parse_experiment(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: not valid json (") + e.what() + ")");
    }

    ExperimentConfig cfg;
    try {
        cfg.task = task_from_name(j.at("task").get<std::string>());
        cfg.seed = j.value("seed", 0ull);
        cfg.out_dir = j.value("out_dir", ".");

        const json& jn = j.at("net");
        try {
            cfg.method = method_from_name(jn.value("method", "euler"));
        } catch (const std::invalid_argument& e) {
            bad("net.method", e.what());
        }
        try {
            cfg.device = kind_from_name(jn.value("device", "relu2"));
        } catch (const std::invalid_argument& e) {
            bad("net.device", e.what());
        }
        if (cfg.device == DeviceKind::Capacitance)
            bad("net.device", "capacitance is the fixed node device, not a learnable edge law");

        const json& jl = jn.at("layers");
        if (!jl.is_array() || jl.empty()) bad("net.layers", "at least one layer required");
        const int repeat_layers = jn.value("repeat_layers", 1);
        if (repeat_layers < 1) bad("net.repeat_layers", "must be >= 1");

        for (size_t i = 0; i < jl.size(); ++i) {
            const std::string key = "net.layers[" + std::to_string(i) + "]";
            LayerSpec L;
            std::optional<std::pair<int, int>> proj_range;
            L.dyn.topo = parse_topo(jl[i].at("topo"), key + ".topo", &proj_range);
            L.dyn.kind = cfg.device;
            L.cfg.method = cfg.method;
            L.cfg.T = jl[i].value("T", 1.0);
            L.cfg.steps = jl[i].value("steps", 40);
            if (L.cfg.steps < 1) bad(key + ".steps", "must be >= 1");
            if (!(L.cfg.T > 0.0)) bad(key + ".T", "must be positive");
            if (jl[i].value("ground", false)) {
                L.dyn.topo.ground_edges.resize(L.dyn.topo.num_nodes);
                std::iota(L.dyn.topo.ground_edges.begin(), L.dyn.topo.ground_edges.end(), 0);
            }
            L.dyn.theta_cap = jl[i].value("theta_cap", 1.0);
            if (!(L.dyn.theta_cap > 0.0)) bad(key + ".theta_cap", "must be positive");
            cfg.layers.push_back(std::move(L));
            if (i + 1 == jl.size()) cfg.proj_range = proj_range;
        }
        if (repeat_layers > 1) {
            const std::vector<LayerSpec> block = cfg.layers;
            for (int r = 1; r < repeat_layers; ++r)
                cfg.layers.insert(cfg.layers.end(), block.begin(), block.end());
        }

        cfg.input_nodes = jn.value("input_nodes", std::vector<int>{});
        cfg.readout_nodes = jn.value("readout_nodes", std::vector<int>{});

        const json& jt = j.value("train", json::object());
        const auto default_loss = [&]() -> std::string {
            switch (cfg.task) {
                case TaskKind::Regression: return "l2";
                case TaskKind::Classification: return "cross_entropy";
                case TaskKind::Generation: return "nll_generation";
                case TaskKind::Density: return "density_matching";
            }
            return "l2";
        };
        try {
            cfg.train.loss = loss_kind_from_name(jt.value("loss", default_loss()));
        } catch (const std::invalid_argument& e) {
            bad("train.loss", e.what());
        }
        if (loss_kind_name(cfg.train.loss) != default_loss())
            bad("train.loss", "'" + loss_kind_name(cfg.train.loss) + "' does not fit task '" +
                                  task_name(cfg.task) + "'");
        cfg.train.epochs = jt.value("epochs", 0);
        cfg.train.batch_size = jt.value("batch_size", 64);
        cfg.train.lr = jt.value("lr", 1e-3);
        try {
            const std::string opt = jt.value("optimizer", "adamw");
            if (opt == "sgd")
                cfg.train.optimizer = OptKind::SGD;
            else if (opt == "adamw")
                cfg.train.optimizer = OptKind::AdamW;
            else
                bad("train.optimizer", "unknown optimizer '" + opt + "'");
        } catch (const std::invalid_argument& e) {
            bad("train.optimizer", e.what());
        }
        cfg.train.weight_decay = jt.value("weight_decay", 0.0);
        cfg.train.cosine_schedule = jt.value("cosine_schedule", true);
        cfg.train.clip_norm = jt.value("clip_norm", 100.0);
        cfg.train.seed = j.value("seed", 0ull);
        cfg.train.batches_per_epoch = jt.value("batches_per_epoch", 10);
        cfg.train.eval_batch = jt.value("eval_batch", 1024);
        if (cfg.train.epochs < 0) bad("train.epochs", "must be >= 0");
        if (cfg.train.batch_size < 1) bad("train.batch_size", "must be >= 1");
        if (!(cfg.train.lr > 0.0)) bad("train.lr", "must be positive");
        if (!(cfg.train.clip_norm > 0.0)) bad("train.clip_norm", "must be positive");
        if (cfg.train.batches_per_epoch < 1) bad("train.batches_per_epoch", "must be >= 1");

        const json& jd = j.at("data");
        cfg.data.source = jd.value("source", "");
        cfg.data.n = jd.value("n", 1000);
        cfg.data.noise_sd = jd.value("noise_sd", 0.0);
        cfg.data.test_fraction = jd.value("test_fraction", 0.2);
        cfg.data.path = jd.value("path", "");
        cfg.data.labels_path = jd.value("labels_path", "");
        cfg.data.test_path = jd.value("test_path", "");
        cfg.data.test_labels_path = jd.value("test_labels_path", "");
        cfg.data.target_column = jd.value("target_column", "y");
        cfg.data.density = jd.value("density", "");
    } catch (const config_error&) {
        throw;
    } catch (const json::exception& e) {
        throw config_error(std::string("config: missing or malformed field (") + e.what() + ")");
    }

    // Cross-field checks.
    if (cfg.data.n < 1) bad("data.n", "must be >= 1");
    if (!(cfg.data.test_fraction >= 0.0 && cfg.data.test_fraction < 1.0))
        bad("data.test_fraction", "must be in [0, 1)");

    const bool known_source = cfg.data.source == "friedman" || cfg.data.source == "csv" ||
                              cfg.data.source == "idx" || cfg.data.source == "density" ||
                              is_gen2d(cfg.data.source);
    if (!known_source) bad("data.source", "unknown source '" + cfg.data.source + "'");

    switch (cfg.task) {
        case TaskKind::Regression:
            if (cfg.data.source == "idx" || cfg.data.source == "density")
                bad("data.source", "regression needs a friedman, gen2d, or csv source");
            break;
        case TaskKind::Classification:
            if (cfg.data.source != "idx" && !is_gen2d(cfg.data.source))
                bad("data.source", "classification needs an idx or gen2d source");
            break;
        case TaskKind::Generation:
            if (!is_gen2d(cfg.data.source) && cfg.data.source != "csv")
                bad("data.source", "generation needs a gen2d or csv source");
            break;
        case TaskKind::Density:
            if (cfg.data.source != "density")
                bad("data.source", "density task needs source \"density\"");
            try {
                density_target(cfg.data.density);
            } catch (const std::invalid_argument&) {
                bad("data.density", "unknown target '" + cfg.data.density + "'");
            }
            break;
    }
    if (cfg.data.source == "csv" && cfg.data.path.empty()) bad("data.path", "csv source needs a path");
    if (cfg.data.source == "idx" && (cfg.data.path.empty() || cfg.data.labels_path.empty()))
        bad("data.path", "idx source needs image and label paths");

    if (cfg.task == TaskKind::Generation || cfg.task == TaskKind::Density) {
        const int n0 = cfg.layers.front().dyn.topo.num_nodes;
        for (const LayerSpec& L : cfg.layers)
            if (L.dyn.topo.num_nodes != n0)
                bad("net.layers", "generation and density tasks need a constant node count");
    }
    return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
    return parse_experiment(read_text_file(path));
}

std::string experiment_to_json(const ExperimentConfig& cfg) {
    json j;
    j["task"] = task_name(cfg.task);
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    json jn;
    jn["method"] = std::string(method_name(cfg.method));
    jn["device"] = std::string(kind_name(cfg.device));
    json jl = json::array();
    for (const LayerSpec& L : cfg.layers) {
        json row;
        row["nodes"] = L.dyn.topo.num_nodes;
        row["edges"] = L.dyn.topo.edges.size();
        row["ground_edges"] = L.dyn.topo.ground_edges.size();
        row["T"] = L.cfg.T;
        row["steps"] = L.cfg.steps;
        if (L.dyn.theta_cap != 1.0) row["theta_cap"] = L.dyn.theta_cap;
        jl.push_back(std::move(row));
    }
    jn["layers"] = std::move(jl);
    jn["input_nodes"] = cfg.input_nodes;
    jn["readout_nodes"] = cfg.readout_nodes;
    j["net"] = std::move(jn);
    json jt;
    jt["loss"] = loss_kind_name(cfg.train.loss);
    jt["epochs"] = cfg.train.epochs;
    jt["batch_size"] = cfg.train.batch_size;
    jt["lr"] = cfg.train.lr;
    jt["optimizer"] = cfg.train.optimizer == OptKind::SGD ? "sgd" : "adamw";
    jt["weight_decay"] = cfg.train.weight_decay;
    jt["cosine_schedule"] = cfg.train.cosine_schedule;
    jt["clip_norm"] = cfg.train.clip_norm;
    jt["batches_per_epoch"] = cfg.train.batches_per_epoch;
    jt["eval_batch"] = cfg.train.eval_batch;
    j["train"] = std::move(jt);
    json jd;
    jd["source"] = cfg.data.source;
    jd["n"] = cfg.data.n;
    jd["noise_sd"] = cfg.data.noise_sd;
    jd["test_fraction"] = cfg.data.test_fraction;
    if (!cfg.data.path.empty()) jd["path"] = cfg.data.path;
    if (!cfg.data.labels_path.empty()) jd["labels_path"] = cfg.data.labels_path;
    if (!cfg.data.test_path.empty()) jd["test_path"] = cfg.data.test_path;
    if (!cfg.data.test_labels_path.empty()) jd["test_labels_path"] = cfg.data.test_labels_path;
    if (!cfg.data.target_column.empty()) jd["target_column"] = cfg.data.target_column;
    if (!cfg.data.density.empty()) jd["density"] = cfg.data.density;
    j["data"] = std::move(jd);
    return j.dump(1);
}

namespace {

std::string resolve_path(const std::string& path, const std::string& data_dir) {
    if (path.empty() || std::filesystem::path(path).is_absolute() || data_dir.empty()) return path;
    return (std::filesystem::path(data_dir) / path).string();
}

constexpr std::uint64_t kSplitSalt = 0xa0761d6478bd642full;

}  // namespace

ResolvedData resolve_data(const ExperimentConfig& cfg, const std::string& data_dir) {
    ResolvedData out;
    const DataConfig& d = cfg.data;
    if (d.source == "density") {
        out.density = density_target(d.density);
        return out;
    }
    if (d.source == "friedman") {
        out.split = gen_friedman(d.n, d.noise_sd, cfg.seed, d.test_fraction);
        return out;
    }
    if (is_gen2d(d.source)) {
        out.split = split_dataset(gen2d(d.source, d.n, cfg.seed), d.test_fraction,
                                  cfg.seed ^ kSplitSalt);
        return out;
    }
    if (d.source == "csv") {
        const Dataset full = load_csv(resolve_path(d.path, data_dir), d.target_column);
        if (!d.test_path.empty()) {
            out.split.train = full;
            out.split.test = load_csv(resolve_path(d.test_path, data_dir), d.target_column);
        } else {
            out.split = split_dataset(full, d.test_fraction, cfg.seed ^ kSplitSalt);
        }
        return out;
    }
    // idx: KNET_MNIST_DIR overrides the data directory so a real export can
    // stand in for the bundled digits.
    std::string dir = data_dir;
    if (const char* env = std::getenv("KNET_MNIST_DIR"); env && *env) dir = env;
    const Dataset train = load_idx(resolve_path(d.path, dir), resolve_path(d.labels_path, dir));
    if (!d.test_path.empty() && !d.test_labels_path.empty()) {
        out.split.train = train;
        out.split.test =
            load_idx(resolve_path(d.test_path, dir), resolve_path(d.test_labels_path, dir));
    } else {
        out.split = split_dataset(train, d.test_fraction, cfg.seed ^ kSplitSalt);
    }
    return out;
}

NetSpec build_net(const ExperimentConfig& cfg, size_t data_dim, int n_outputs) {
    NetSpec net;
    net.layers = cfg.layers;
    for (LayerSpec& L : net.layers) L.dyn.params.assign(L.dyn.param_dim(), 0.0);

    const int first_width = net.layers.front().dyn.topo.num_nodes;
    const int last_width = net.layers.back().dyn.topo.num_nodes;

    if (!cfg.input_nodes.empty()) {
        net.input_nodes = cfg.input_nodes;
    } else if (cfg.task == TaskKind::Generation || cfg.task == TaskKind::Density) {
        net.input_nodes.resize(first_width);
        std::iota(net.input_nodes.begin(), net.input_nodes.end(), 0);
    } else {
        if (static_cast<int>(data_dim) > first_width)
            throw config_error("net.layers[0]: " + std::to_string(first_width) +
                               " nodes cannot embed " + std::to_string(data_dim) + " features");
        net.input_nodes.resize(data_dim);
        std::iota(net.input_nodes.begin(), net.input_nodes.end(), 0);
    }

    if (!cfg.readout_nodes.empty()) {
        net.readout_nodes = cfg.readout_nodes;
    } else if (cfg.task == TaskKind::Generation || cfg.task == TaskKind::Density) {
        net.readout_nodes.resize(last_width);
        std::iota(net.readout_nodes.begin(), net.readout_nodes.end(), 0);
    } else if (cfg.task == TaskKind::Classification && cfg.proj_range) {
        for (int i = cfg.proj_range->first; i < cfg.proj_range->second; ++i)
            net.readout_nodes.push_back(i);
    } else {
        if (n_outputs > last_width)
            throw config_error("net.readout_nodes: last layer has " + std::to_string(last_width) +
                               " nodes, need " + std::to_string(n_outputs));
        net.readout_nodes.resize(n_outputs);
        std::iota(net.readout_nodes.begin(), net.readout_nodes.end(), 0);
    }

    try {
        check_net(net);
        if (cfg.task == TaskKind::Generation || cfg.task == TaskKind::Density) check_flow_net(net);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("net: ") + e.what());
    }
    return net;
}

}  // namespace knet
