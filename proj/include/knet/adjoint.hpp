#pragma once

#include "knet/integrator.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace knet {

struct BackwardResult {
    std::vector<double> grad_params;  // aligned with LayerDynamics.params
    std::vector<double> grad_v0;
};

// Exact reverse-mode gradient of the discrete forward integration: the same
// grid, method, and direction as cfg, differentiated step by step. traj must
// hold the step-boundary states integrate recorded for this dyn/cfg.
// dL_dlogp, when set, seeds the log-density channel; the channel's own
// adjoint stays constant because the channel is a pure accumulator.
BackwardResult backward(const LayerDynamics& dyn, const Trajectory& traj,
                        const IntegratorConfig& cfg, std::span<const double> dL_dvT,
                        std::optional<double> dL_dlogp = std::nullopt);

// Central-difference oracle over the layer parameters.
std::vector<double> finite_diff_grad(const LayerDynamics& dyn,
                                     const std::function<double(const LayerDynamics&)>& loss,
                                     double eps);

}  // namespace knet
