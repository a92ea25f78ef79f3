#pragma once

#include "knet/adjoint.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace knet {

// One time segment of the network: its circuit plus how long and how finely
// to integrate it.
struct LayerSpec {
    LayerDynamics dyn;
    IntegratorConfig cfg;
};

// A D-layer net. Inputs are written to input_nodes of the first layer at
// t = 0 (other nodes start at 0); outputs are read from readout_nodes of the
// final layer. Between layers the first min(n_prev, n_next) node voltages
// carry over, added nodes start at 0, dropped nodes disappear.
struct NetSpec {
    std::vector<LayerSpec> layers;
    std::vector<int> input_nodes;
    std::vector<int> readout_nodes;

    int depth() const { return static_cast<int>(layers.size()); }
    double total_horizon() const;
    size_t param_dim() const;
    // Global parameter vector: each layer's params in layer order.
    std::vector<double> gather_params() const;
    void scatter_params(std::span<const double> p);
};

void check_net(const NetSpec& net);
// Flow nets additionally need a constant node count and full-width
// input/readout permutations, so the log-density bookkeeping covers every
// state dimension.
void check_flow_net(const NetSpec& net);

std::vector<double> forward(const NetSpec& net, std::span<const double> x);

// Step-boundary states of every integrated segment, in computation order.
// Plain forward passes hold segments (layer 0, fwd) ... (layer D-1, fwd);
// density evaluation holds (layer D-1, rev) ... (layer 0, rev).
struct ForwardTrace {
    struct Segment {
        int layer = 0;
        IntegratorConfig cfg;
        Trajectory traj;
    };
    std::vector<Segment> segments;
    std::vector<double> v_end;  // full state of the last segment
    bool with_logp = false;
    double logp_delta = 0.0;
};

// Forward pass keeping the full final state (and optionally the trace and the
// log-density channel).
std::vector<double> forward_full(const NetSpec& net, std::span<const double> x, bool with_logp,
                                 ForwardTrace* trace);

struct NetBackwardResult {
    std::vector<double> grad_params;   // aligned with gather_params()
    std::vector<double> grad_v_start;  // w.r.t. the first segment's input state
};

// Reverse mode through every recorded segment. dL_dv_end seeds the full final
// state of the last segment; dL_dlogp seeds the log-density channel (trace
// must have been recorded with it on).
NetBackwardResult net_backward(const NetSpec& net, const ForwardTrace& trace,
                               std::span<const double> dL_dv_end,
                               std::optional<double> dL_dlogp = std::nullopt);

double std_normal_logpdf(std::span<const double> v);

struct FlowResult {
    std::vector<double> x;    // data-space point, readout order
    std::vector<double> eps;  // base-space point, input order
    double logq = 0.0;
};

// Base noise -> data: integrate forward from v(0) = eps with the log-density
// channel; logq = log N(eps) + accumulated change.
FlowResult flow_forward(const NetSpec& net, std::span<const double> eps,
                        ForwardTrace* trace = nullptr);

// Data -> base noise: integrate the negated field from v(D*T) = x back to
// t = 0; logq = log N(v(0)) - change accumulated along the reverse path.
FlowResult flow_reverse(const NetSpec& net, std::span<const double> x,
                        ForwardTrace* trace = nullptr);

double forward_logdensity(const NetSpec& net, std::span<const double> x);

// Draw eps ~ N(0, I) with a seeded engine and push it through the flow.
std::vector<double> sample(const NetSpec& net, std::uint64_t seed, double* logq = nullptr);

// Versioned JSON, written atomically; round-trips bit-exactly in one
// environment.
void save_checkpoint(const NetSpec& net, const std::string& path);
NetSpec load_checkpoint(const std::string& path);

// Central-difference oracle over the global parameter vector.
std::vector<double> finite_diff_grad(const NetSpec& net,
                                     const std::function<double(const NetSpec&)>& loss,
                                     double eps);

// Adjoint vs finite differences on random multi-layer nets, one report per
// evaluable device kind. Parameters whose probes cross a ReLU kink are
// skipped.
struct GradCheckReport {
    DeviceKind kind = DeviceKind::Source;
    double max_rel_err = 0.0;
    int params_checked = 0;
    int params_skipped = 0;
};
std::vector<GradCheckReport> run_gradcheck(std::uint64_t seed, int nets_per_kind = 20);

}  // namespace knet
