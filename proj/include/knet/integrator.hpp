#pragma once

#include "knet/dynamics.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace knet {

enum class Method { ForwardEuler, RK4 };

std::string_view method_name(Method m);
Method method_from_name(std::string_view name);  // "euler"/"forward-euler", "rk4"

struct IntegratorConfig {
    Method method = Method::ForwardEuler;
    int steps = 40;
    double T = 1.0;
    // Integrate the negated field. Used to run the flow backwards from data
    // to the base distribution with the same stepper.
    bool reversed = false;
};

struct NodeState {
    std::vector<double> v;
    std::optional<double> logp_delta;
};

// States at every step boundary: states[0] = v(0), states[steps] = v(T).
// logp[k] is the co-integrated log-density change at boundary k (empty when
// the channel is off).
struct Trajectory {
    std::vector<std::vector<double>> states;
    std::vector<double> logp;
};

// Fixed-step explicit integration of dv/dt = rhs(v) over [0, T]. With the
// log-density channel on, co-integrates dl/dt = -trace(d rhs/d v) on the same
// grid and method, starting from v0.logp_delta (or 0). Throws numeric_error
// naming the step on divergence.
NodeState integrate(const LayerDynamics& dyn, const NodeState& v0, const IntegratorConfig& cfg,
                    bool with_logp = false, Trajectory* traj = nullptr);

// Unit-less software quantities mapped onto hardware per the capacitance/time
// scaling law: theta_cap of a farads runs the net in sw_horizon * a seconds.
// Reporting only; trajectories are unchanged.
struct ScalePlan {
    double a = 1.0;
    double sw_horizon = 0.0;
    double hw_time_s = 0.0;
    double hw_cap_F = 0.0;
};
ScalePlan hw_scale(double sw_horizon, double a);

// Integrates (theta_cap, T) and (a*theta_cap, a*T) with the same step count
// and returns the max absolute deviation over all step-boundary states.
double verify_scale_equivalence(const LayerDynamics& dyn, const NodeState& v0,
                                const IntegratorConfig& cfg, double a);

}  // namespace knet
