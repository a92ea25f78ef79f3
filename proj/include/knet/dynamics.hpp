#pragma once

#include "knet/device.hpp"
#include "knet/topology.hpp"

#include <span>
#include <vector>

namespace knet {

// One layer's Kirchhoff current law system. params is flat: param_count(kind)
// values per edge in edge order, then per ground edge in ground-edge order.
// theta_cap is the fixed node-to-ground capacitance shared by every node.
struct LayerDynamics {
    Topology topo;
    DeviceKind kind = DeviceKind::ReLU2;
    std::vector<double> params;
    double theta_cap = 1.0;

    size_t param_dim() const {
        return (topo.edges.size() + topo.ground_edges.size()) * param_count(kind);
    }
    std::span<const double> edge_params(size_t e) const {
        const size_t pc = param_count(kind);
        return {params.data() + e * pc, pc};
    }
    std::span<const double> ground_params(size_t g) const {
        const size_t pc = param_count(kind);
        return {params.data() + (topo.edges.size() + g) * pc, pc};
    }
};

// Throws invalid_argument on bad kind, packing, capacitance, or topology.
void check_dynamics(const LayerDynamics& dyn);

// dv_j/dt = (1/theta_cap) * (sum of in-edge currents - sum of out-edge
// currents). A ground edge on node j drains g(v_j, 0, theta) from j; the
// ground voltage is fixed at 0. Accumulation is plain summation in edge
// order, so results are bit-stable for a fixed environment.
void rhs_into(const LayerDynamics& dyn, std::span<const double> v, std::span<double> out);
std::vector<double> rhs(const LayerDynamics& dyn, std::span<const double> v);

// Exact trace of the Jacobian of rhs at v, O(|edges|).
double rhs_trace(const LayerDynamics& dyn, std::span<const double> v);

// Dense Jacobian (row = output node). Oracle for small nets.
std::vector<std::vector<double>> rhs_jacobian(const LayerDynamics& dyn, std::span<const double> v);

// Nodal-analysis form C v' + G v = b; C is diagonal (one grounded capacitor
// per node).
struct LinearSystem {
    std::vector<double> C;
    std::vector<std::vector<double>> G;
    std::vector<double> b;
};

// Only Source and Conductance layers are linear.
LinearSystem assemble_linear(const LayerDynamics& dyn);

}  // namespace knet
