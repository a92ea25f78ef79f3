#include "knet/integrator.hpp"

#include "knet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace knet {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

std::string_view method_name(Method m) {
    return m == Method::ForwardEuler ? "euler" : "rk4";
}

Method method_from_name(std::string_view name) {
    std::string lower(name);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "euler" || lower == "forward-euler") return Method::ForwardEuler;
    if (lower == "rk4") return Method::RK4;
    throw std::invalid_argument("unknown integration method '" + std::string(name) + "'");
}

NodeState integrate(const LayerDynamics& dyn, const NodeState& v0, const IntegratorConfig& cfg,
                    bool with_logp, Trajectory* traj) {
    check_dynamics(dyn);
    if (cfg.steps < 1) throw std::invalid_argument("integrate: steps must be >= 1");
    if (!(cfg.T > 0.0)) throw std::invalid_argument("integrate: T must be positive");
    if (static_cast<int>(v0.v.size()) != dyn.topo.num_nodes)
        throw std::invalid_argument("integrate: initial state size mismatch");

    const int n = dyn.topo.num_nodes;
    const double dt = cfg.T / cfg.steps;
    const double sgn = cfg.reversed ? -1.0 : 1.0;

    std::vector<double> v = v0.v;
    double lp = with_logp ? v0.logp_delta.value_or(0.0) : 0.0;

    if (traj) {
        traj->states.clear();
        traj->logp.clear();
        traj->states.reserve(cfg.steps + 1);
        traj->states.push_back(v);
        if (with_logp) traj->logp.push_back(lp);
    }

    std::vector<double> k1(n), k2(n), k3(n), k4(n), u(n);

    for (int step = 0; step < cfg.steps; ++step) {
        try {
            if (cfg.method == Method::ForwardEuler) {
                rhs_into(dyn, v, k1);
                const double tr = with_logp ? rhs_trace(dyn, v) : 0.0;
                for (int j = 0; j < n; ++j) v[j] += dt * sgn * k1[j];
                if (with_logp) lp -= dt * sgn * tr;
            } else {
                rhs_into(dyn, v, k1);
                const double t1 = with_logp ? rhs_trace(dyn, v) : 0.0;
                for (int j = 0; j < n; ++j) u[j] = v[j] + 0.5 * dt * sgn * k1[j];
                rhs_into(dyn, u, k2);
                const double t2 = with_logp ? rhs_trace(dyn, u) : 0.0;
                for (int j = 0; j < n; ++j) u[j] = v[j] + 0.5 * dt * sgn * k2[j];
                rhs_into(dyn, u, k3);
                const double t3 = with_logp ? rhs_trace(dyn, u) : 0.0;
                for (int j = 0; j < n; ++j) u[j] = v[j] + dt * sgn * k3[j];
                rhs_into(dyn, u, k4);
                const double t4 = with_logp ? rhs_trace(dyn, u) : 0.0;
                for (int j = 0; j < n; ++j)
                    v[j] += dt * sgn * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
                if (with_logp) lp -= dt * sgn * (t1 + 2.0 * t2 + 2.0 * t3 + t4) / 6.0;
            }
        } catch (const numeric_error& err) {
            throw numeric_error(std::string(err.what()) + " (integration step " +
                                std::to_string(step) + ")");
        }
        if (!all_finite(v) || (with_logp && !std::isfinite(lp)))
            throw numeric_error("integrate: diverged at step " + std::to_string(step));
        if (traj) {
            traj->states.push_back(v);
            if (with_logp) traj->logp.push_back(lp);
        }
    }

    NodeState out;
    out.v = std::move(v);
    if (with_logp) out.logp_delta = lp;
    return out;
}

ScalePlan hw_scale(double sw_horizon, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("hw_scale: a must be positive");
    ScalePlan plan;
    plan.a = a;
    plan.sw_horizon = sw_horizon;
    plan.hw_time_s = sw_horizon * a;
    plan.hw_cap_F = 1.0 * a;
    return plan;
}

double verify_scale_equivalence(const LayerDynamics& dyn, const NodeState& v0,
                                const IntegratorConfig& cfg, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("verify_scale_equivalence: a must be positive");
    Trajectory base, scaled;
    integrate(dyn, v0, cfg, false, &base);
    LayerDynamics dyn2 = dyn;
    dyn2.theta_cap *= a;
    IntegratorConfig cfg2 = cfg;
    cfg2.T *= a;
    integrate(dyn2, v0, cfg2, false, &scaled);
    double dev = 0.0;
    for (size_t k = 0; k < base.states.size(); ++k)
        for (size_t j = 0; j < base.states[k].size(); ++j)
            dev = std::max(dev, std::fabs(base.states[k][j] - scaled.states[k][j]));
    return dev;
}

}  // namespace knet
