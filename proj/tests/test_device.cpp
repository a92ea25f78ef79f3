#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "knet/device.hpp"
#include "knet/errors.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

using namespace knet;

namespace {

const std::vector<DeviceKind> kEvaluable = {DeviceKind::Source,  DeviceKind::Conductance,
                                            DeviceKind::ReLU2,   DeviceKind::Tanh2,
                                            DeviceKind::ReLU3,   DeviceKind::Tanh3};

bool is_relu(DeviceKind k) { return k == DeviceKind::ReLU2 || k == DeviceKind::ReLU3; }
bool is_tanh(DeviceKind k) { return k == DeviceKind::Tanh2 || k == DeviceKind::Tanh3; }

double preactivation(DeviceKind k, double v_s, double v_d, const std::vector<double>& th) {
    switch (k) {
        case DeviceKind::ReLU2:
        case DeviceKind::Tanh2: return th[0] * (v_s - v_d) + th[1];
        case DeviceKind::ReLU3:
        case DeviceKind::Tanh3: return th[0] * v_s + th[1] * v_d + th[2];
        default: return 1.0;  // no kink
    }
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

double central_diff(const std::function<double(double)>& f, double x, double eps) {
    return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

}  // namespace

TEST_CASE("branch_current frozen values") {
    std::vector<double> th{2.0, -1.0};
    CHECK(branch_current(DeviceKind::ReLU2, 1.0, 0.25, th) == doctest::Approx(0.5).epsilon(1e-15));

    th = {3.7, 0.0};
    CHECK(branch_current(DeviceKind::Tanh2, 0.8, 0.8, th) == 0.0);

    th = {2.0};
    CHECK(branch_current(DeviceKind::Conductance, 2.0, 0.5, th) == doctest::Approx(3.0));

    th = {1.0, 1.0, 0.0};
    CHECK(branch_current(DeviceKind::ReLU3, 0.5, -0.5, th) == 0.0);

    th = {0.75};
    CHECK(branch_current(DeviceKind::Source, 123.0, -9.0, th) == 0.75);
}

TEST_CASE("capacitance and bad param lengths are rejected") {
    std::vector<double> th{1.0};
    CHECK_THROWS_AS(branch_current(DeviceKind::Capacitance, 0.0, 0.0, th), unsupported_device);
    CHECK_THROWS_AS(branch_current_partials(DeviceKind::Capacitance, 0.0, 0.0, th),
                    unsupported_device);
    CHECK_THROWS_AS(trace_contribution(DeviceKind::Capacitance, 0.0, 0.0, th),
                    unsupported_device);
    CHECK_THROWS_AS(ground_trace_contribution(DeviceKind::Capacitance, 0.0, th),
                    unsupported_device);

    CHECK_THROWS_AS(branch_current(DeviceKind::ReLU2, 0.0, 0.0, th), std::invalid_argument);
    std::vector<double> th3{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(branch_current(DeviceKind::Conductance, 0.0, 0.0, th3),
                    std::invalid_argument);
}

TEST_CASE("param_count and names round-trip") {
    CHECK(param_count(DeviceKind::Source) == 1);
    CHECK(param_count(DeviceKind::Conductance) == 1);
    CHECK(param_count(DeviceKind::Capacitance) == 1);
    CHECK(param_count(DeviceKind::ReLU2) == 2);
    CHECK(param_count(DeviceKind::Tanh2) == 2);
    CHECK(param_count(DeviceKind::ReLU3) == 3);
    CHECK(param_count(DeviceKind::Tanh3) == 3);

    CHECK(kind_from_name("ReLU2") == DeviceKind::ReLU2);
    CHECK(kind_from_name("TANH3") == DeviceKind::Tanh3);
    CHECK(kind_from_name("source") == DeviceKind::Source);
    for (DeviceKind k : kEvaluable) CHECK(kind_from_name(kind_name(k)) == k);
    CHECK_THROWS_AS(kind_from_name("diode"), std::invalid_argument);
}

TEST_CASE("partials frozen values") {
    std::vector<double> th{2.0, 0.3};
    BranchPartials p = branch_current_partials(DeviceKind::ReLU2, 1.0, 0.25, th);
    CHECK(p.d_vs == 2.0);
    CHECK(p.d_vd == -2.0);
    CHECK(p.d_theta[0] == doctest::Approx(0.75));
    CHECK(p.d_theta[1] == 1.0);

    th = {2.0, -10.0};  // inactive region
    p = branch_current_partials(DeviceKind::ReLU2, 1.0, 0.25, th);
    CHECK(p.d_vs == 0.0);
    CHECK(p.d_vd == 0.0);
    CHECK(p.d_theta[0] == 0.0);
    CHECK(p.d_theta[1] == 0.0);

    // Pre-activation 0: sech^2(0) = 1.
    th = {1.5, -2.5, 0.0};
    const double v_s = 1.0, v_d = 0.6;
    std::vector<double> th0{1.5, -2.5, -(1.5 * v_s - 2.5 * v_d)};
    p = branch_current_partials(DeviceKind::Tanh3, v_s, v_d, th0);
    CHECK(p.d_vs == doctest::Approx(1.5));
    CHECK(p.d_vd == doctest::Approx(-2.5));
    CHECK(p.d_theta[0] == doctest::Approx(v_s));
    CHECK(p.d_theta[1] == doctest::Approx(v_d));
    CHECK(p.d_theta[2] == doctest::Approx(1.0));

    // ReLU subgradient at the kink is 0, matching the forward value.
    th = {1.0, 1.0, 0.0};
    p = branch_current_partials(DeviceKind::ReLU3, 0.5, -0.5, th);
    CHECK(p.d_vs == 0.0);
    CHECK(p.d_theta[2] == 0.0);
}

TEST_CASE("partials match central finite differences") {
    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const double eps = 1e-6, kink_margin = 1e-4;

    for (DeviceKind k : kEvaluable) {
        const int np = param_count(k);
        int checked = 0;
        while (checked < 10000) {
            const double v_s = dist(rng), v_d = dist(rng);
            std::vector<double> th(np);
            for (double& x : th) x = dist(rng);
            if (is_relu(k) && std::fabs(preactivation(k, v_s, v_d, th)) < kink_margin) continue;
            ++checked;

            BranchPartials p = branch_current_partials(k, v_s, v_d, th);
            auto cur_vs = [&](double x) { return branch_current(k, x, v_d, th); };
            auto cur_vd = [&](double x) { return branch_current(k, v_s, x, th); };
            REQUIRE(rel_err(p.d_vs, central_diff(cur_vs, v_s, eps)) < 1e-5);
            REQUIRE(rel_err(p.d_vd, central_diff(cur_vd, v_d, eps)) < 1e-5);
            for (int i = 0; i < np; ++i) {
                auto cur_th = [&](double x) {
                    std::vector<double> t2 = th;
                    t2[i] = x;
                    return branch_current(k, v_s, v_d, t2);
                };
                REQUIRE(rel_err(p.d_theta[i], central_diff(cur_th, th[i], eps)) < 1e-5);
            }
        }
    }
}

TEST_CASE("two-terminal kinds are shift invariant, three-parameter kinds are not") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double v_s = dist(rng), v_d = dist(rng), c = dist(rng);
        std::vector<double> th2{dist(rng), dist(rng)};
        CHECK(branch_current(DeviceKind::ReLU2, v_s + c, v_d + c, th2) ==
              doctest::Approx(branch_current(DeviceKind::ReLU2, v_s, v_d, th2)).epsilon(1e-12));
        CHECK(branch_current(DeviceKind::Tanh2, v_s + c, v_d + c, th2) ==
              doctest::Approx(branch_current(DeviceKind::Tanh2, v_s, v_d, th2)).epsilon(1e-12));
    }
    std::vector<double> th3{1.0, 1.0, 0.0};
    CHECK(branch_current(DeviceKind::Tanh3, 1.0, 1.0, th3) !=
          branch_current(DeviceKind::Tanh3, 0.0, 0.0, th3));
    CHECK(branch_current(DeviceKind::ReLU3, 1.0, 1.0, th3) !=
          branch_current(DeviceKind::ReLU3, 0.0, 0.0, th3));
}

TEST_CASE("range bounds per family") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const double v_s = dist(rng), v_d = dist(rng);
        std::vector<double> th2{dist(rng), dist(rng)}, th3{dist(rng), dist(rng), dist(rng)};
        CHECK(branch_current(DeviceKind::ReLU2, v_s, v_d, th2) >= 0.0);
        CHECK(branch_current(DeviceKind::ReLU3, v_s, v_d, th3) >= 0.0);
        const double t2 = branch_current(DeviceKind::Tanh2, v_s, v_d, th2);
        const double t3 = branch_current(DeviceKind::Tanh3, v_s, v_d, th3);
        CHECK(t2 > -1.0);
        CHECK(t2 < 1.0);
        CHECK(t3 > -1.0);
        CHECK(t3 < 1.0);
    }
}

TEST_CASE("trace contribution equals d_vd - d_vs") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (DeviceKind k : kEvaluable) {
        const int np = param_count(k);
        for (int i = 0; i < 500; ++i) {
            const double v_s = dist(rng), v_d = dist(rng);
            std::vector<double> th(np);
            for (double& x : th) x = dist(rng);
            BranchPartials p = branch_current_partials(k, v_s, v_d, th);
            TracePartials t = trace_contribution(k, v_s, v_d, th);
            CHECK(t.value == doctest::Approx(p.d_vd - p.d_vs).epsilon(1e-14));
            // Ground variant: -dg/dv_s at (v, 0).
            BranchPartials pg = branch_current_partials(k, v_s, 0.0, th);
            TracePartials tg = ground_trace_contribution(k, v_s, th);
            CHECK(tg.value == doctest::Approx(-pg.d_vs).epsilon(1e-14));
        }
    }
}

TEST_CASE("trace partials match finite differences of the trace value") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const double eps = 1e-6, kink_margin = 1e-4;

    for (DeviceKind k : kEvaluable) {
        const int np = param_count(k);
        int checked = 0;
        while (checked < 2000) {
            const double v_s = dist(rng), v_d = dist(rng);
            std::vector<double> th(np);
            for (double& x : th) x = dist(rng);
            if (is_relu(k) && (std::fabs(preactivation(k, v_s, v_d, th)) < kink_margin ||
                               std::fabs(preactivation(k, v_s, 0.0, th)) < kink_margin))
                continue;
            ++checked;

            TracePartials t = trace_contribution(k, v_s, v_d, th);
            auto tc_vs = [&](double x) { return trace_contribution(k, x, v_d, th).value; };
            auto tc_vd = [&](double x) { return trace_contribution(k, v_s, x, th).value; };
            REQUIRE(rel_err(t.d_vs, central_diff(tc_vs, v_s, eps)) < 1e-5);
            REQUIRE(rel_err(t.d_vd, central_diff(tc_vd, v_d, eps)) < 1e-5);

            TracePartials g = ground_trace_contribution(k, v_s, th);
            auto gc_v = [&](double x) { return ground_trace_contribution(k, x, th).value; };
            REQUIRE(rel_err(g.d_vs, central_diff(gc_v, v_s, eps)) < 1e-5);

            for (int i = 0; i < np; ++i) {
                auto tc_th = [&](double x) {
                    std::vector<double> t2 = th;
                    t2[i] = x;
                    return trace_contribution(k, v_s, v_d, t2).value;
                };
                auto gc_th = [&](double x) {
                    std::vector<double> t2 = th;
                    t2[i] = x;
                    return ground_trace_contribution(k, v_s, t2).value;
                };
                REQUIRE(rel_err(t.d_theta[i], central_diff(tc_th, th[i], eps)) < 1e-5);
                REQUIRE(rel_err(g.d_theta[i], central_diff(gc_th, th[i], eps)) < 1e-5);
            }
        }
    }
    CHECK(is_tanh(DeviceKind::Tanh2));  // silence unused helper in release builds
}
