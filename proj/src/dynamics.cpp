#include "knet/dynamics.hpp"

#include "knet/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace knet {

namespace {

void check_state(const LayerDynamics& dyn, std::span<const double> v) {
    if (static_cast<int>(v.size()) != dyn.topo.num_nodes)
        throw std::invalid_argument("rhs: state has " + std::to_string(v.size()) +
                                    " entries, topology has " +
                                    std::to_string(dyn.topo.num_nodes) + " nodes");
    for (double x : v)
        if (!std::isfinite(x)) throw numeric_error("rhs: non-finite node voltage");
}

}  // namespace

void check_dynamics(const LayerDynamics& dyn) {
    if (dyn.kind == DeviceKind::Capacitance)
        throw std::invalid_argument(
            "layer dynamics: capacitance is not a learnable edge device");
    const std::string bad = validate(dyn.topo);
    if (!bad.empty()) throw std::invalid_argument("layer dynamics: " + bad);
    if (dyn.params.size() != dyn.param_dim())
        throw std::invalid_argument("layer dynamics: params has " +
                                    std::to_string(dyn.params.size()) + " values, need " +
                                    std::to_string(dyn.param_dim()));
    if (!(dyn.theta_cap > 0.0))
        throw std::invalid_argument("layer dynamics: theta_cap must be positive");
}

void rhs_into(const LayerDynamics& dyn, std::span<const double> v, std::span<double> out) {
    check_state(dyn, v);
    for (double& x : out) x = 0.0;
    for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
        const Edge& ed = dyn.topo.edges[e];
        const double i = branch_current(dyn.kind, v[ed.src], v[ed.dst], dyn.edge_params(e));
        out[ed.dst] += i;
        out[ed.src] -= i;
    }
    for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g) {
        const int j = dyn.topo.ground_edges[g];
        out[j] -= branch_current(dyn.kind, v[j], 0.0, dyn.ground_params(g));
    }
    for (double& x : out) x /= dyn.theta_cap;
}

std::vector<double> rhs(const LayerDynamics& dyn, std::span<const double> v) {
    std::vector<double> out(v.size());
    rhs_into(dyn, v, out);
    return out;
}

double rhs_trace(const LayerDynamics& dyn, std::span<const double> v) {
    check_state(dyn, v);
    double acc = 0.0;
    for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
        const Edge& ed = dyn.topo.edges[e];
        acc += trace_contribution(dyn.kind, v[ed.src], v[ed.dst], dyn.edge_params(e)).value;
    }
    for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g)
        acc += ground_trace_contribution(dyn.kind, v[dyn.topo.ground_edges[g]],
                                         dyn.ground_params(g)).value;
    return acc / dyn.theta_cap;
}

std::vector<std::vector<double>> rhs_jacobian(const LayerDynamics& dyn,
                                              std::span<const double> v) {
    check_state(dyn, v);
    const int n = dyn.topo.num_nodes;
    std::vector<std::vector<double>> J(n, std::vector<double>(n, 0.0));
    const double inv = 1.0 / dyn.theta_cap;
    for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
        const Edge& ed = dyn.topo.edges[e];
        const BranchPartials p =
            branch_current_partials(dyn.kind, v[ed.src], v[ed.dst], dyn.edge_params(e));
        J[ed.dst][ed.src] += p.d_vs * inv;
        J[ed.dst][ed.dst] += p.d_vd * inv;
        J[ed.src][ed.src] -= p.d_vs * inv;
        J[ed.src][ed.dst] -= p.d_vd * inv;
    }
    for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g) {
        const int j = dyn.topo.ground_edges[g];
        const BranchPartials p =
            branch_current_partials(dyn.kind, v[j], 0.0, dyn.ground_params(g));
        J[j][j] -= p.d_vs * inv;
    }
    return J;
}

LinearSystem assemble_linear(const LayerDynamics& dyn) {
    check_dynamics(dyn);
    if (dyn.kind != DeviceKind::Source && dyn.kind != DeviceKind::Conductance)
        throw std::invalid_argument("assemble_linear: nonlinear device kind");
    const int n = dyn.topo.num_nodes;
    LinearSystem sys;
    sys.C.assign(n, dyn.theta_cap);
    sys.G.assign(n, std::vector<double>(n, 0.0));
    sys.b.assign(n, 0.0);
    for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
        const Edge& ed = dyn.topo.edges[e];
        const double th = dyn.edge_params(e)[0];
        if (dyn.kind == DeviceKind::Source) {
            sys.b[ed.dst] += th;
            sys.b[ed.src] -= th;
        } else {
            sys.G[ed.src][ed.src] += th;
            sys.G[ed.dst][ed.dst] += th;
            sys.G[ed.src][ed.dst] -= th;
            sys.G[ed.dst][ed.src] -= th;
        }
    }
    for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g) {
        const int j = dyn.topo.ground_edges[g];
        const double th = dyn.ground_params(g)[0];
        if (dyn.kind == DeviceKind::Source)
            sys.b[j] -= th;
        else
            sys.G[j][j] += th;
    }
    return sys;
}

}  // namespace knet
