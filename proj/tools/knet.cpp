// knet: build circuit topologies, train and evaluate circuit-ODE nets, draw
// samples, dump densities and trajectories, check gradients, and print
// hardware scale plans.

#include "knet/config.hpp"
#include "knet/device.hpp"
#include "knet/errors.hpp"
#include "knet/fsio.hpp"
#include "knet/integrator.hpp"
#include "knet/topology.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace knet;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCheckFailed = 4;

std::string format_row(std::span<const double> values) {
    std::ostringstream out;
    char buf[64];
    for (size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), i + 1 < values.size() ? "%.17g," : "%.17g", values[i]);
        out << buf;
    }
    return out.str();
}

std::vector<double> parse_vector(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string field;
    while (std::getline(in, field, ',')) {
        char* end = nullptr;
        const double v = std::strtod(field.c_str(), &end);
        if (end == field.c_str() || *end != '\0')
            throw config_error("bad number '" + field + "' in vector argument");
        out.push_back(v);
    }
    if (out.empty()) throw config_error("empty vector argument");
    return out;
}

struct TopoArgs {
    std::string kind = "fc";
    int nodes = 2, repeat = 1;
    int channels = 1, width = 0, height = 0, kernel = 1;
    int proj_nodes = 1, proj_repeat = 1;
    std::string out;
};

int run_topo(const TopoArgs& a) {
    Topology topo;
    if (a.kind == "fc")
        topo = fc_topo(a.nodes, a.repeat);
    else if (a.kind == "ne")
        topo = ne_topo(a.channels, a.width, a.height, a.kernel, a.repeat);
    else if (a.kind == "proj")
        topo = proj_topo(a.channels, a.width, a.height, a.kernel, a.proj_nodes, a.repeat,
                         a.proj_repeat);
    else
        throw config_error("topo: unknown kind '" + a.kind + "'");
    const std::string text = to_text(topo);
    if (a.out.empty())
        std::cout << text;
    else
        write_text_atomic(a.out, text);
    return kExitOk;
}

struct RunArgs {
    std::string config;
    std::string data_dir;
    std::string out_dir;     // override
    std::int64_t seed = -1;  // override when >= 0
};

ExperimentConfig load_run_config(const RunArgs& a) {
    ExperimentConfig cfg = load_experiment(a.config);
    if (a.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(a.seed);
        cfg.train.seed = cfg.seed;
    }
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    return cfg;
}

int n_classes(const SplitDataset& s) {
    int top = 0;
    for (int l : s.train.labels) top = std::max(top, l);
    for (int l : s.test.labels) top = std::max(top, l);
    return top + 1;
}

NetSpec assemble_net(const ExperimentConfig& cfg, const ResolvedData& data) {
    size_t dim = 0;
    int outputs = 0;
    switch (cfg.task) {
        case TaskKind::Regression:
            dim = data.split.train.dim();
            outputs = static_cast<int>(data.split.train.targets.front().size());
            break;
        case TaskKind::Classification:
            dim = data.split.train.dim();
            outputs = n_classes(data.split);
            break;
        case TaskKind::Generation:
            dim = data.split.train.dim();
            outputs = static_cast<int>(dim);
            break;
        case TaskKind::Density:
            dim = static_cast<size_t>(cfg.layers.front().dyn.topo.num_nodes);
            outputs = static_cast<int>(dim);
            break;
    }
    NetSpec net = build_net(cfg, dim, outputs);
    init_params(net, cfg.seed);
    return net;
}

TrainResult dispatch_train(const ExperimentConfig& cfg, const ResolvedData& data, NetSpec net) {
    switch (cfg.task) {
        case TaskKind::Regression:
            return train_regression(std::move(net), data.split.train.features,
                                    data.split.train.targets, data.split.test.features,
                                    data.split.test.targets, cfg.train);
        case TaskKind::Classification:
            return train_classification(std::move(net), data.split.train.features,
                                        data.split.train.labels, data.split.test.features,
                                        data.split.test.labels, cfg.train);
        case TaskKind::Generation:
            return train_generation(std::move(net), data.split.train.features,
                                    data.split.test.features, cfg.train);
        case TaskKind::Density:
            return train_density(std::move(net), data.density, cfg.train);
    }
    throw config_error("task: unknown task");
}

double eval_metric(const ExperimentConfig& cfg, const ResolvedData& data, const NetSpec& net) {
    switch (cfg.task) {
        case TaskKind::Regression: {
            Matrix pred;
            pred.reserve(data.split.test.size());
            for (const auto& x : data.split.test.features) pred.push_back(forward(net, x));
            return loss_l2(pred, data.split.test.targets);
        }
        case TaskKind::Classification:
            return classification_accuracy(net, data.split.test.features, data.split.test.labels);
        case TaskKind::Generation:
            return loss_nll_generation(net, data.split.test.features);
        case TaskKind::Density:
            return loss_density_matching(net, data.density, cfg.train.eval_batch,
                                         cfg.seed ^ 0x9e3779b97f4a7c15ull);
    }
    throw config_error("task: unknown task");
}

int run_train(const RunArgs& a) {
    const ExperimentConfig cfg = load_run_config(a);
    const ResolvedData data = resolve_data(cfg, a.data_dir);
    NetSpec net = assemble_net(cfg, data);

    const TrainResult res = dispatch_train(cfg, data, std::move(net));

    std::filesystem::create_directories(cfg.out_dir);
    save_checkpoint(res.net, cfg.out_dir + "/checkpoint.json");
    write_metrics_csv(cfg.out_dir + "/metrics.csv", res.log);
    write_text_atomic(cfg.out_dir + "/resolved_config.json", experiment_to_json(cfg));

    if (!res.log.empty()) {
        std::printf("epochs %zu  final_train_loss %.6g  best_test_metric %.6g (epoch %d)\n",
                    res.log.size(), res.log.back().train_loss, res.best_metric, res.best_epoch);
        if (res.clip_events > 0)
            std::printf("gradient clip triggered on %d batches\n", res.clip_events);
    } else {
        std::printf("0 epochs requested; wrote the initialized net\n");
    }
    std::printf("artifacts in %s\n", cfg.out_dir.c_str());
    return kExitOk;
}

struct EvalArgs : RunArgs {
    std::string checkpoint;
    std::string trace;      // input vector, comma-separated
    std::string trace_out;  // trajectory CSV path
    bool with_logp = false;
};

int run_eval(const EvalArgs& a) {
    const NetSpec net = load_checkpoint(a.checkpoint);

    if (!a.trace.empty()) {
        const std::vector<double> x = parse_vector(a.trace);
        ForwardTrace trace;
        forward_full(net, x, a.with_logp, &trace);
        std::ostringstream out;
        out << "t";
        const int width = net.layers.front().dyn.topo.num_nodes;
        for (int i = 0; i < width; ++i) out << ",v_" << i;
        if (a.with_logp) out << ",logp_delta";
        out << "\n";
        double t0 = 0.0;
        char buf[64];
        for (size_t si = 0; si < trace.segments.size(); ++si) {
            const auto& seg = trace.segments[si];
            const double dt = seg.cfg.T / seg.cfg.steps;
            // The first row of a follow-on segment repeats the carried state.
            for (size_t k = si == 0 ? 0 : 1; k < seg.traj.states.size(); ++k) {
                std::snprintf(buf, sizeof(buf), "%.17g", t0 + static_cast<double>(k) * dt);
                out << buf;
                for (double v : seg.traj.states[k]) {
                    std::snprintf(buf, sizeof(buf), ",%.17g", v);
                    out << buf;
                }
                if (a.with_logp) {
                    std::snprintf(buf, sizeof(buf), ",%.17g", seg.traj.logp[k]);
                    out << buf;
                }
                out << "\n";
            }
            t0 += seg.cfg.T;
        }
        if (a.trace_out.empty())
            std::cout << out.str();
        else
            write_text_atomic(a.trace_out, out.str());
        return kExitOk;
    }

    const ExperimentConfig cfg = load_run_config(a);
    const ResolvedData data = resolve_data(cfg, a.data_dir);
    std::printf("test_metric %.17g\n", eval_metric(cfg, data, net));
    return kExitOk;
}

struct SampleArgs {
    std::string checkpoint;
    int n = 512;
    std::int64_t seed = 0;
    std::string out;
};

int run_sample(const SampleArgs& a) {
    if (a.n < 1) throw config_error("sample: --n must be >= 1");
    const NetSpec net = load_checkpoint(a.checkpoint);
    std::ostringstream out;
    const size_t dim = net.readout_nodes.size();
    for (size_t i = 0; i < dim; ++i) out << "x" << i << (i + 1 < dim ? "," : "\n");
    for (int i = 0; i < a.n; ++i)
        out << format_row(sample(net, static_cast<std::uint64_t>(a.seed) + i)) << "\n";
    if (a.out.empty())
        std::cout << out.str();
    else
        write_text_atomic(a.out, out.str());
    return kExitOk;
}

struct DensityArgs {
    std::string checkpoint;
    int grid = 100;
    double lo = -4.0, hi = 4.0;
    std::string out;
};

int run_density(const DensityArgs& a) {
    if (a.grid < 2) throw config_error("density: --grid must be >= 2");
    if (!(a.hi > a.lo)) throw config_error("density: --hi must exceed --lo");
    const NetSpec net = load_checkpoint(a.checkpoint);
    if (net.readout_nodes.size() != 2)
        throw config_error("density: grid dumps need a 2-node flow net");
    std::ostringstream out;
    out << "x0,x1,logq\n";
    const double h = (a.hi - a.lo) / (a.grid - 1);
    char buf[64];
    for (int i = 0; i < a.grid; ++i)
        for (int j = 0; j < a.grid; ++j) {
            const std::vector<double> x = {a.lo + i * h, a.lo + j * h};
            std::snprintf(buf, sizeof(buf), ",%.17g", forward_logdensity(net, x));
            out << format_row(x) << buf << "\n";
        }
    if (a.out.empty())
        std::cout << out.str();
    else
        write_text_atomic(a.out, out.str());
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, int nets, double tol) {
    const std::vector<GradCheckReport> reports = knet::run_gradcheck(seed, nets);
    bool ok = true;
    std::printf("%-12s %-14s %8s %8s\n", "kind", "max_rel_err", "checked", "skipped");
    for (const GradCheckReport& rep : reports) {
        const bool pass = rep.max_rel_err < tol && rep.params_checked > 0;
        ok = ok && pass;
        std::printf("%-12s %-14.3e %8d %8d  %s\n", std::string(kind_name(rep.kind)).c_str(),
                    rep.max_rel_err, rep.params_checked, rep.params_skipped,
                    pass ? "ok" : "FAIL");
    }
    return ok ? kExitOk : kExitCheckFailed;
}

int run_scale(double a, double horizon) {
    const ScalePlan plan = hw_scale(horizon, a);
    std::printf("%-14s %-14s %-16s %-14s\n", "a", "sw_horizon", "hw_time_s", "hw_cap_F");
    std::printf("%-14.6g %-14.6g %-16.6g %-14.6g\n", plan.a, plan.sw_horizon, plan.hw_time_s,
                plan.hw_cap_F);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"circuit-ODE networks: topologies, training, sampling, densities"};
    app.require_subcommand(1);

    TopoArgs topo;
    CLI::App* topo_cmd = app.add_subcommand("topo", "emit an edge-list topology");
    topo_cmd->add_option("--kind", topo.kind, "fc | ne | proj");
    topo_cmd->add_option("--nodes", topo.nodes, "node count (fc)");
    topo_cmd->add_option("--repeat", topo.repeat, "parallel devices per pair");
    topo_cmd->add_option("--channels", topo.channels, "channels (ne/proj)");
    topo_cmd->add_option("--width", topo.width, "grid width (ne/proj)");
    topo_cmd->add_option("--height", topo.height, "grid height (ne/proj)");
    topo_cmd->add_option("--kernel", topo.kernel, "window size (ne/proj)");
    topo_cmd->add_option("--proj-nodes", topo.proj_nodes, "aggregation node count (proj)");
    topo_cmd->add_option("--proj-repeat", topo.proj_repeat, "parallel projection devices");
    topo_cmd->add_option("--out", topo.out, "write here instead of stdout");

    RunArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a net from an experiment config");
    train_cmd->add_option("--config", train_args.config, "experiment JSON")->required();
    train_cmd->add_option("--data-dir", train_args.data_dir, "directory for relative data paths");
    train_cmd->add_option("--out-dir", train_args.out_dir, "override config out_dir");
    train_cmd->add_option("--seed", train_args.seed, "override config seed");

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint (or dump a trajectory)");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint JSON")->required();
    eval_cmd->add_option("--config", eval_args.config, "experiment JSON (for the test metric)");
    eval_cmd->add_option("--data-dir", eval_args.data_dir, "directory for relative data paths");
    eval_cmd->add_option("--seed", eval_args.seed, "override config seed");
    eval_cmd->add_option("--trace", eval_args.trace, "input vector to integrate, e.g. 0.1,-0.2");
    eval_cmd->add_option("--trace-out", eval_args.trace_out, "trajectory CSV path");
    eval_cmd->add_flag("--logp", eval_args.with_logp, "co-integrate the log-density channel");

    SampleArgs sample_args;
    CLI::App* sample_cmd = app.add_subcommand("sample", "draw samples from a flow checkpoint");
    sample_cmd->add_option("--checkpoint", sample_args.checkpoint, "checkpoint JSON")->required();
    sample_cmd->add_option("--n", sample_args.n, "sample count");
    sample_cmd->add_option("--seed", sample_args.seed, "base seed");
    sample_cmd->add_option("--out", sample_args.out, "CSV path (stdout if omitted)");

    DensityArgs density_args;
    CLI::App* density_cmd = app.add_subcommand("density", "dump model log-density on a grid");
    density_cmd->add_option("--checkpoint", density_args.checkpoint, "checkpoint JSON")->required();
    density_cmd->add_option("--grid", density_args.grid, "points per axis");
    density_cmd->add_option("--lo", density_args.lo, "grid lower bound");
    density_cmd->add_option("--hi", density_args.hi, "grid upper bound");
    density_cmd->add_option("--out", density_args.out, "CSV path (stdout if omitted)");

    std::uint64_t gc_seed = 1234;
    int gc_nets = 20;
    double gc_tol = 1e-4;
    CLI::App* gc_cmd = app.add_subcommand("gradcheck", "adjoint vs finite differences");
    gc_cmd->add_option("--seed", gc_seed, "random net seed");
    gc_cmd->add_option("--nets", gc_nets, "nets per device kind");
    gc_cmd->add_option("--tol", gc_tol, "max relative error");

    double scale_a = 1.0, scale_horizon = 1.0;
    CLI::App* scale_cmd = app.add_subcommand("scale", "software-to-hardware scale plan");
    scale_cmd->add_option("--a", scale_a, "scale factor")->required();
    scale_cmd->add_option("--horizon", scale_horizon, "software horizon D*T");

    try {
        app.parse(argc, argv);
        if (topo_cmd->parsed()) return run_topo(topo);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (sample_cmd->parsed()) return run_sample(sample_args);
        if (density_cmd->parsed()) return run_density(density_args);
        if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_nets, gc_tol);
        if (scale_cmd->parsed()) return run_scale(scale_a, scale_horizon);
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const numeric_error& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
