#pragma once

#include <array>
#include <span>
#include <string_view>

namespace knet {

// Branch device laws. Capacitance is listed for completeness but is never
// evaluated as a generic branch: the architecture's only capacitors are the
// fixed node-to-ground ones absorbed into the dynamics.
enum class DeviceKind { Source, Conductance, Capacitance, ReLU2, Tanh2, ReLU3, Tanh3 };

int param_count(DeviceKind kind);
std::string_view kind_name(DeviceKind kind);
DeviceKind kind_from_name(std::string_view name);  // case-insensitive

// Current through one branch:
//   Source       theta
//   Conductance  theta * (v_s - v_d)
//   ReLU2        relu(theta1 * (v_s - v_d) + theta2)
//   Tanh2        tanh(theta1 * (v_s - v_d) + theta2)
//   ReLU3        relu(theta1 * v_s + theta2 * v_d + theta3)
//   Tanh3        tanh(theta1 * v_s + theta2 * v_d + theta3)
double branch_current(DeviceKind kind, double v_s, double v_d, std::span<const double> params);

struct BranchPartials {
    double d_vs = 0.0;
    double d_vd = 0.0;
    std::array<double, 3> d_theta{};  // first param_count(kind) entries valid
};

// Exact analytic partials. The ReLU derivative at the kink is 0, the same
// convention the forward trace and adjoint both rely on.
BranchPartials branch_current_partials(DeviceKind kind, double v_s, double v_d,
                                       std::span<const double> params);

// One edge's contribution to tr(d rhs/d v) before the 1/theta_cap factor:
// value = dg/dv_d - dg/dv_s, with its own partials (second derivatives of g),
// needed to differentiate the log-density channel.
struct TracePartials {
    double value = 0.0;
    double d_vs = 0.0;
    double d_vd = 0.0;
    std::array<double, 3> d_theta{};
};

TracePartials trace_contribution(DeviceKind kind, double v_s, double v_d,
                                 std::span<const double> params);

// Ground-edge variant: the ground voltage is clamped, so node j's device to
// ground contributes -dg/dv_s evaluated at (v, 0, theta).
TracePartials ground_trace_contribution(DeviceKind kind, double v, std::span<const double> params);

}  // namespace knet
