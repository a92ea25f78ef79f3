#include "knet/adjoint.hpp"

#include "knet/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace knet {

namespace {

// out += coef * J^T(v) * a and grad += coef * (df/dtheta)^T(v) * a, with J
// and df/dtheta the rhs derivatives at v. Every edge touches only its two
// endpoints, so the pullback stays O(|edges|).
void add_vjp(const LayerDynamics& dyn, std::span<const double> v, std::span<const double> a,
             double coef, std::span<double> out, std::span<double> grad) {
    const int pc = param_count(dyn.kind);
    const double c = coef / dyn.theta_cap;
    for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
        const Edge& ed = dyn.topo.edges[e];
        const BranchPartials p =
            branch_current_partials(dyn.kind, v[ed.src], v[ed.dst], dyn.edge_params(e));
        const double pull = c * (a[ed.dst] - a[ed.src]);
        out[ed.src] += pull * p.d_vs;
        out[ed.dst] += pull * p.d_vd;
        for (int i = 0; i < pc; ++i) grad[e * pc + i] += pull * p.d_theta[i];
    }
    const size_t base = dyn.topo.edges.size() * pc;
    for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g) {
        const int j = dyn.topo.ground_edges[g];
        const BranchPartials p =
            branch_current_partials(dyn.kind, v[j], 0.0, dyn.ground_params(g));
        const double pull = -c * a[j];
        out[j] += pull * p.d_vs;
        for (int i = 0; i < pc; ++i) grad[base + g * pc + i] += pull * p.d_theta[i];
    }
}

// out += coef * d(trace)/dv and grad += coef * d(trace)/dtheta at v.
void add_trace_grad(const LayerDynamics& dyn, std::span<const double> v, double coef,
                    std::span<double> out, std::span<double> grad) {
    const int pc = param_count(dyn.kind);
    const double c = coef / dyn.theta_cap;
    for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
        const Edge& ed = dyn.topo.edges[e];
        const TracePartials t =
            trace_contribution(dyn.kind, v[ed.src], v[ed.dst], dyn.edge_params(e));
        out[ed.src] += c * t.d_vs;
        out[ed.dst] += c * t.d_vd;
        for (int i = 0; i < pc; ++i) grad[e * pc + i] += c * t.d_theta[i];
    }
    const size_t base = dyn.topo.edges.size() * pc;
    for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g) {
        const int j = dyn.topo.ground_edges[g];
        const TracePartials t =
            ground_trace_contribution(dyn.kind, v[j], dyn.ground_params(g));
        out[j] += c * t.d_vs;
        for (int i = 0; i < pc; ++i) grad[base + g * pc + i] += c * t.d_theta[i];
    }
}

void check_finite(std::span<const double> a, int step) {
    for (double x : a)
        if (!std::isfinite(x))
            throw numeric_error("backward: non-finite adjoint at step " + std::to_string(step));
}

}  // namespace

BackwardResult backward(const LayerDynamics& dyn, const Trajectory& traj,
                        const IntegratorConfig& cfg, std::span<const double> dL_dvT,
                        std::optional<double> dL_dlogp) {
    check_dynamics(dyn);
    const int n = dyn.topo.num_nodes;
    if (cfg.steps < 1 || traj.states.size() != static_cast<size_t>(cfg.steps) + 1)
        throw std::invalid_argument("backward: trajectory does not match the step count");
    for (const auto& s : traj.states)
        if (static_cast<int>(s.size()) != n)
            throw std::invalid_argument("backward: checkpoint width mismatch");
    if (static_cast<int>(dL_dvT.size()) != n)
        throw std::invalid_argument("backward: adjoint seed size mismatch");

    const double dtd = (cfg.T / cfg.steps) * (cfg.reversed ? -1.0 : 1.0);
    const bool with_lp = dL_dlogp.has_value();
    const double a_lp = dL_dlogp.value_or(0.0);

    BackwardResult res;
    res.grad_params.assign(dyn.params.size(), 0.0);
    std::vector<double> a(dL_dvT.begin(), dL_dvT.end());

    if (cfg.method == Method::ForwardEuler) {
        std::vector<double> anew(n);
        for (int k = cfg.steps - 1; k >= 0; --k) {
            const std::vector<double>& vk = traj.states[k];
            anew = a;
            add_vjp(dyn, vk, a, dtd, anew, res.grad_params);
            if (with_lp) add_trace_grad(dyn, vk, -dtd * a_lp, anew, res.grad_params);
            a.swap(anew);
            check_finite(a, k);
        }
    } else {
        std::vector<double> k1(n), k2(n), k3(n), u2(n), u3(n), u4(n);
        std::vector<double> b(n), e(n), e_sum(n);
        for (int k = cfg.steps - 1; k >= 0; --k) {
            const std::vector<double>& vk = traj.states[k];
            // Recompute the forward stages from the stored boundary state.
            rhs_into(dyn, vk, k1);
            for (int j = 0; j < n; ++j) u2[j] = vk[j] + 0.5 * dtd * k1[j];
            rhs_into(dyn, u2, k2);
            for (int j = 0; j < n; ++j) u3[j] = vk[j] + 0.5 * dtd * k2[j];
            rhs_into(dyn, u3, k3);
            for (int j = 0; j < n; ++j) u4[j] = vk[j] + dtd * k3[j];

            std::fill(e_sum.begin(), e_sum.end(), 0.0);

            // Stage 4.
            for (int j = 0; j < n; ++j) b[j] = (dtd / 6.0) * a[j];
            std::fill(e.begin(), e.end(), 0.0);
            add_vjp(dyn, u4, b, 1.0, e, res.grad_params);
            if (with_lp) add_trace_grad(dyn, u4, -(dtd / 6.0) * a_lp, e, res.grad_params);
            for (int j = 0; j < n; ++j) e_sum[j] += e[j];

            // Stage 3.
            for (int j = 0; j < n; ++j) b[j] = (dtd / 3.0) * a[j] + dtd * e[j];
            std::fill(e.begin(), e.end(), 0.0);
            add_vjp(dyn, u3, b, 1.0, e, res.grad_params);
            if (with_lp) add_trace_grad(dyn, u3, -(dtd / 3.0) * a_lp, e, res.grad_params);
            for (int j = 0; j < n; ++j) e_sum[j] += e[j];

            // Stage 2.
            for (int j = 0; j < n; ++j) b[j] = (dtd / 3.0) * a[j] + 0.5 * dtd * e[j];
            std::fill(e.begin(), e.end(), 0.0);
            add_vjp(dyn, u2, b, 1.0, e, res.grad_params);
            if (with_lp) add_trace_grad(dyn, u2, -(dtd / 3.0) * a_lp, e, res.grad_params);
            for (int j = 0; j < n; ++j) e_sum[j] += e[j];

            // Stage 1 evaluates at the boundary state itself.
            for (int j = 0; j < n; ++j) b[j] = (dtd / 6.0) * a[j] + 0.5 * dtd * e[j];
            std::fill(e.begin(), e.end(), 0.0);
            add_vjp(dyn, vk, b, 1.0, e, res.grad_params);
            if (with_lp) add_trace_grad(dyn, vk, -(dtd / 6.0) * a_lp, e, res.grad_params);
            for (int j = 0; j < n; ++j) e_sum[j] += e[j];

            for (int j = 0; j < n; ++j) a[j] += e_sum[j];
            check_finite(a, k);
        }
    }

    res.grad_v0 = std::move(a);
    return res;
}

std::vector<double> finite_diff_grad(const LayerDynamics& dyn,
                                     const std::function<double(const LayerDynamics&)>& loss,
                                     double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
    std::vector<double> grad(dyn.params.size());
    LayerDynamics probe = dyn;
    for (size_t i = 0; i < dyn.params.size(); ++i) {
        probe.params[i] = dyn.params[i] + eps;
        const double up = loss(probe);
        probe.params[i] = dyn.params[i] - eps;
        const double down = loss(probe);
        probe.params[i] = dyn.params[i];
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

}  // namespace knet
