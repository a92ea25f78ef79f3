#include "knet/device.hpp"

#include "knet/errors.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace knet {

namespace {

void check_params(DeviceKind kind, std::span<const double> params) {
    if (kind == DeviceKind::Capacitance)
        throw unsupported_device(
            "capacitance is the fixed node-to-ground device handled by the dynamics");
    if (static_cast<int>(params.size()) != param_count(kind))
        throw std::invalid_argument("device params: expected " +
                                    std::to_string(param_count(kind)) + " values, got " +
                                    std::to_string(params.size()));
}

// Subgradient convention: 0 at the kink.
double step(double z) { return z > 0.0 ? 1.0 : 0.0; }

double sech2(double z) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

// d sech^2(z) / dz
double dsech2(double z) {
    const double t = std::tanh(z);
    return -2.0 * t * (1.0 - t * t);
}

}  // namespace

int param_count(DeviceKind kind) {
    switch (kind) {
        case DeviceKind::Source:
        case DeviceKind::Conductance:
        case DeviceKind::Capacitance:
            return 1;
        case DeviceKind::ReLU2:
        case DeviceKind::Tanh2:
            return 2;
        case DeviceKind::ReLU3:
        case DeviceKind::Tanh3:
            return 3;
    }
    throw std::invalid_argument("unknown device kind");
}

std::string_view kind_name(DeviceKind kind) {
    switch (kind) {
        case DeviceKind::Source: return "source";
        case DeviceKind::Conductance: return "conductance";
        case DeviceKind::Capacitance: return "capacitance";
        case DeviceKind::ReLU2: return "relu2";
        case DeviceKind::Tanh2: return "tanh2";
        case DeviceKind::ReLU3: return "relu3";
        case DeviceKind::Tanh3: return "tanh3";
    }
    throw std::invalid_argument("unknown device kind");
}

DeviceKind kind_from_name(std::string_view name) {
    std::string lower(name);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (DeviceKind k : {DeviceKind::Source, DeviceKind::Conductance, DeviceKind::Capacitance,
                         DeviceKind::ReLU2, DeviceKind::Tanh2, DeviceKind::ReLU3,
                         DeviceKind::Tanh3})
        if (lower == kind_name(k)) return k;
    throw std::invalid_argument("unknown device kind '" + std::string(name) + "'");
}

double branch_current(DeviceKind kind, double v_s, double v_d, std::span<const double> params) {
    check_params(kind, params);
    switch (kind) {
        case DeviceKind::Source:
            return params[0];
        case DeviceKind::Conductance:
            return params[0] * (v_s - v_d);
        case DeviceKind::ReLU2: {
            const double z = params[0] * (v_s - v_d) + params[1];
            return z > 0.0 ? z : 0.0;
        }
        case DeviceKind::Tanh2:
            return std::tanh(params[0] * (v_s - v_d) + params[1]);
        case DeviceKind::ReLU3: {
            const double z = params[0] * v_s + params[1] * v_d + params[2];
            return z > 0.0 ? z : 0.0;
        }
        case DeviceKind::Tanh3:
            return std::tanh(params[0] * v_s + params[1] * v_d + params[2]);
        case DeviceKind::Capacitance:
            break;
    }
    throw std::invalid_argument("unknown device kind");
}

BranchPartials branch_current_partials(DeviceKind kind, double v_s, double v_d,
                                       std::span<const double> params) {
    check_params(kind, params);
    BranchPartials p;
    switch (kind) {
        case DeviceKind::Source:
            p.d_theta[0] = 1.0;
            return p;
        case DeviceKind::Conductance:
            p.d_vs = params[0];
            p.d_vd = -params[0];
            p.d_theta[0] = v_s - v_d;
            return p;
        case DeviceKind::ReLU2: {
            const double g = step(params[0] * (v_s - v_d) + params[1]);
            p.d_vs = params[0] * g;
            p.d_vd = -params[0] * g;
            p.d_theta = {(v_s - v_d) * g, g, 0.0};
            return p;
        }
        case DeviceKind::Tanh2: {
            const double s = sech2(params[0] * (v_s - v_d) + params[1]);
            p.d_vs = params[0] * s;
            p.d_vd = -params[0] * s;
            p.d_theta = {(v_s - v_d) * s, s, 0.0};
            return p;
        }
        case DeviceKind::ReLU3: {
            const double g = step(params[0] * v_s + params[1] * v_d + params[2]);
            p.d_vs = params[0] * g;
            p.d_vd = params[1] * g;
            p.d_theta = {v_s * g, v_d * g, g};
            return p;
        }
        case DeviceKind::Tanh3: {
            const double s = sech2(params[0] * v_s + params[1] * v_d + params[2]);
            p.d_vs = params[0] * s;
            p.d_vd = params[1] * s;
            p.d_theta = {v_s * s, v_d * s, s};
            return p;
        }
        case DeviceKind::Capacitance:
            break;
    }
    throw std::invalid_argument("unknown device kind");
}

TracePartials trace_contribution(DeviceKind kind, double v_s, double v_d,
                                 std::span<const double> params) {
    check_params(kind, params);
    TracePartials t;
    switch (kind) {
        case DeviceKind::Source:
            return t;
        case DeviceKind::Conductance:
            t.value = -2.0 * params[0];
            t.d_theta[0] = -2.0;
            return t;
        case DeviceKind::ReLU2: {
            const double g = step(params[0] * (v_s - v_d) + params[1]);
            t.value = -2.0 * params[0] * g;
            t.d_theta = {-2.0 * g, 0.0, 0.0};
            return t;
        }
        case DeviceKind::Tanh2: {
            const double z = params[0] * (v_s - v_d) + params[1];
            const double s = sech2(z), ds = dsech2(z), th1 = params[0];
            t.value = -2.0 * th1 * s;
            t.d_vs = -2.0 * th1 * th1 * ds;
            t.d_vd = 2.0 * th1 * th1 * ds;
            t.d_theta = {-2.0 * s - 2.0 * th1 * ds * (v_s - v_d), -2.0 * th1 * ds, 0.0};
            return t;
        }
        case DeviceKind::ReLU3: {
            const double g = step(params[0] * v_s + params[1] * v_d + params[2]);
            t.value = (params[1] - params[0]) * g;
            t.d_theta = {-g, g, 0.0};
            return t;
        }
        case DeviceKind::Tanh3: {
            const double z = params[0] * v_s + params[1] * v_d + params[2];
            const double s = sech2(z), ds = dsech2(z);
            const double diff = params[1] - params[0];
            t.value = diff * s;
            t.d_vs = diff * ds * params[0];
            t.d_vd = diff * ds * params[1];
            t.d_theta = {-s + diff * ds * v_s, s + diff * ds * v_d, diff * ds};
            return t;
        }
        case DeviceKind::Capacitance:
            break;
    }
    throw std::invalid_argument("unknown device kind");
}

TracePartials ground_trace_contribution(DeviceKind kind, double v,
                                        std::span<const double> params) {
    check_params(kind, params);
    TracePartials t;
    switch (kind) {
        case DeviceKind::Source:
            return t;
        case DeviceKind::Conductance:
            t.value = -params[0];
            t.d_theta[0] = -1.0;
            return t;
        case DeviceKind::ReLU2: {
            const double g = step(params[0] * v + params[1]);
            t.value = -params[0] * g;
            t.d_theta = {-g, 0.0, 0.0};
            return t;
        }
        case DeviceKind::Tanh2: {
            const double z = params[0] * v + params[1];
            const double s = sech2(z), ds = dsech2(z), th1 = params[0];
            t.value = -th1 * s;
            t.d_vs = -th1 * th1 * ds;
            t.d_theta = {-s - th1 * ds * v, -th1 * ds, 0.0};
            return t;
        }
        case DeviceKind::ReLU3: {
            const double g = step(params[0] * v + params[2]);
            t.value = -params[0] * g;
            t.d_theta = {-g, 0.0, 0.0};
            return t;
        }
        case DeviceKind::Tanh3: {
            const double z = params[0] * v + params[2];
            const double s = sech2(z), ds = dsech2(z), th1 = params[0];
            t.value = -th1 * s;
            t.d_vs = -th1 * th1 * ds;
            t.d_theta = {-s - th1 * ds * v, 0.0, -th1 * ds};
            return t;
        }
        case DeviceKind::Capacitance:
            break;
    }
    throw std::invalid_argument("unknown device kind");
}

}  // namespace knet
