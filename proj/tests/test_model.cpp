#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "knet/errors.hpp"
#include "knet/model.hpp"
#include "knet/topology.hpp"

#include "test_util.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace knet;

namespace {

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

NetSpec two_node_conductance_net(double theta, double theta_cap = 1.0) {
    LayerSpec L;
    L.dyn.topo.num_nodes = 2;
    L.dyn.topo.edges = {{0, 1}};
    L.dyn.kind = DeviceKind::Conductance;
    L.dyn.params = {theta};
    L.dyn.theta_cap = theta_cap;
    L.cfg = {Method::ForwardEuler, 1, 1.0};
    return NetSpec{{L}, {0, 1}, {0, 1}};
}

// Small two-layer flow net on 2 nodes; tanh edges plus ground drains keep the
// pushforward close enough to the base that [-4,4]^2 holds ~all its mass.
NetSpec small_flow_net(std::uint64_t seed, Method method = Method::RK4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    NetSpec net;
    for (int li = 0; li < 2; ++li) {
        LayerSpec L;
        L.dyn.topo = fc_topo(2, 2);
        L.dyn.topo.ground_edges = {0, 1};
        L.dyn.kind = DeviceKind::Tanh2;
        L.dyn.params.resize(L.dyn.param_dim());
        for (double& p : L.dyn.params) p = unit(rng);
        L.cfg = {method, 48, 0.25};
        net.layers.push_back(std::move(L));
    }
    net.input_nodes = {0, 1};
    net.readout_nodes = {0, 1};
    return net;
}

// Reference log|det J| oracle: integrate dJ/dt = (df/dv) J alongside v with
// dense RK4 over every layer, J(0) = I.
double dense_logabsdet(const NetSpec& net, std::span<const double> eps,
                       std::vector<double>* x_out = nullptr) {
    const int n = net.layers.front().dyn.topo.num_nodes;
    std::vector<double> v(eps.begin(), eps.end());
    std::vector<std::vector<double>> J(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) J[i][i] = 1.0;

    auto mat_mul = [n](const std::vector<std::vector<double>>& A,
                       const std::vector<std::vector<double>>& B) {
        std::vector<std::vector<double>> C(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) C[i][j] += A[i][k] * B[k][j];
        return C;
    };
    auto vec_axpy = [](const std::vector<double>& a, double h, const std::vector<double>& b) {
        std::vector<double> r(a);
        for (size_t i = 0; i < r.size(); ++i) r[i] += h * b[i];
        return r;
    };
    auto mat_axpy = [n](const std::vector<std::vector<double>>& A, double h,
                        const std::vector<std::vector<double>>& B) {
        auto R = A;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R[i][j] += h * B[i][j];
        return R;
    };

    for (const LayerSpec& L : net.layers) {
        const double h = L.cfg.T / L.cfg.steps;
        for (int k = 0; k < L.cfg.steps; ++k) {
            auto f1 = rhs(L.dyn, v);
            auto K1 = mat_mul(rhs_jacobian(L.dyn, v), J);
            auto v2 = vec_axpy(v, h / 2, f1);
            auto J2 = mat_axpy(J, h / 2, K1);
            auto f2 = rhs(L.dyn, v2);
            auto K2 = mat_mul(rhs_jacobian(L.dyn, v2), J2);
            auto v3 = vec_axpy(v, h / 2, f2);
            auto J3 = mat_axpy(J, h / 2, K2);
            auto f3 = rhs(L.dyn, v3);
            auto K3 = mat_mul(rhs_jacobian(L.dyn, v3), J3);
            auto v4 = vec_axpy(v, h, f3);
            auto J4 = mat_axpy(J, h, K3);
            auto f4 = rhs(L.dyn, v4);
            auto K4 = mat_mul(rhs_jacobian(L.dyn, v4), J4);
            for (int i = 0; i < n; ++i) {
                v[i] += h / 6 * (f1[i] + 2 * f2[i] + 2 * f3[i] + f4[i]);
                for (int j = 0; j < n; ++j)
                    J[i][j] += h / 6 * (K1[i][j] + 2 * K2[i][j] + 2 * K3[i][j] + K4[i][j]);
            }
        }
    }
    if (x_out) *x_out = v;
    // LU with partial pivoting.
    double logdet = 0.0;
    auto A = J;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        logdet += std::log(std::fabs(A[c][c]));
        for (int r = c + 1; r < n; ++r) {
            const double m = A[r][c] / A[c][c];
            for (int j = c; j < n; ++j) A[r][j] -= m * A[c][j];
        }
    }
    return logdet;
}

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("zero relu params act as the identity map") {
    std::mt19937_64 rng(7);
    NetSpec net;
    for (int li = 0; li < 2; ++li) {
        LayerSpec L;
        L.dyn = random_layer(rng, 5, 12, DeviceKind::ReLU2, 2);
        std::fill(L.dyn.params.begin(), L.dyn.params.end(), 0.0);
        L.cfg = {Method::ForwardEuler, 8, 1.0};
        net.layers.push_back(std::move(L));
    }
    net.input_nodes = {0, 1, 2, 3, 4};
    net.readout_nodes = {0, 1, 2, 3, 4};

    const std::vector<double> x = {0.4, -1.2, 0.0, 2.5, -0.3};
    const std::vector<double> y = forward(net, x);
    REQUIRE(y.size() == x.size());
    for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);

    // Identity flow: density reduces to the base log-density.
    CHECK(forward_logdensity(net, x) == std_normal_logpdf(x));
}

TEST_CASE("single euler step matches the hand-computed chain") {
    // One conductance edge 0->1, theta=0.5, v(0)=(1,0), one step of size 1:
    // i = 0.5, f = (-0.5, +0.5), v(T) = (0.5, 0.5).
    NetSpec net = two_node_conductance_net(0.5);
    const std::vector<double> y = forward(net, std::vector<double>{1.0, 0.0});
    CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-15));

    // Doubling the node capacitance halves the step of the same field.
    NetSpec slow = two_node_conductance_net(0.5, 2.0);
    const std::vector<double> ys = forward(slow, std::vector<double>{1.0, 0.0});
    CHECK(ys[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(ys[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("nodes added at a layer transition enter at zero volts") {
    std::mt19937_64 rng(11);
    NetSpec net;
    LayerSpec L1;
    L1.dyn = random_layer(rng, 8, 16, DeviceKind::Tanh2);
    L1.cfg = {Method::ForwardEuler, 6, 1.0};
    LayerSpec L2;
    L2.dyn = random_layer(rng, 10, 20, DeviceKind::Tanh2);
    L2.cfg = {Method::ForwardEuler, 6, 1.0};
    net.layers = {L1, L2};
    net.input_nodes = {0, 1, 2, 3, 4, 5, 6, 7};
    net.readout_nodes = {0, 1};

    std::vector<double> x = random_state(rng, 8);
    ForwardTrace trace;
    forward_full(net, x, false, &trace);
    REQUIRE(trace.segments.size() == 2);
    const std::vector<double>& into_l2 = trace.segments[1].traj.states.front();
    REQUIRE(into_l2.size() == 10);
    CHECK(into_l2[8] == 0.0);
    CHECK(into_l2[9] == 0.0);
    // Carried nodes inherit the exact exit voltages of layer 1.
    const std::vector<double>& out_l1 = trace.segments[0].traj.states.back();
    for (int i = 0; i < 8; ++i) CHECK(into_l2[i] == out_l1[i]);
}

TEST_CASE("dropping nodes keeps the leading voltages") {
    std::mt19937_64 rng(13);
    NetSpec net;
    LayerSpec L1;
    L1.dyn = random_layer(rng, 6, 12, DeviceKind::Tanh3);
    L1.cfg = {Method::RK4, 5, 0.8};
    LayerSpec L2;
    L2.dyn = random_layer(rng, 3, 6, DeviceKind::Tanh3);
    L2.cfg = {Method::RK4, 5, 0.8};
    net.layers = {L1, L2};
    net.input_nodes = {0, 1, 2, 3, 4, 5};
    net.readout_nodes = {0, 1, 2};

    std::vector<double> x = random_state(rng, 6);
    ForwardTrace trace;
    forward_full(net, x, false, &trace);
    const std::vector<double>& out_l1 = trace.segments[0].traj.states.back();
    const std::vector<double>& into_l2 = trace.segments[1].traj.states.front();
    REQUIRE(into_l2.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(into_l2[i] == out_l1[i]);
}

TEST_CASE("splitting a layer in half leaves the outputs bit-identical") {
    std::mt19937_64 rng(17);
    for (Method method : {Method::ForwardEuler, Method::RK4}) {
        LayerDynamics dyn = random_layer(rng, 4, 10, DeviceKind::Tanh2, 1);

        NetSpec whole;
        whole.layers = {{dyn, {method, 40, 1.0}}};
        whole.input_nodes = {0, 1, 2, 3};
        whole.readout_nodes = {0, 1, 2, 3};

        NetSpec split;
        split.layers = {{dyn, {method, 20, 0.5}}, {dyn, {method, 20, 0.5}}};
        split.input_nodes = whole.input_nodes;
        split.readout_nodes = whole.readout_nodes;

        std::vector<double> x = random_state(rng, 4);
        ForwardTrace tw, ts;
        forward_full(whole, x, true, &tw);
        forward_full(split, x, true, &ts);
        REQUIRE(tw.v_end.size() == ts.v_end.size());
        for (size_t i = 0; i < tw.v_end.size(); ++i) CHECK(tw.v_end[i] == ts.v_end[i]);
        CHECK(tw.logp_delta == ts.logp_delta);
    }
}

TEST_CASE("net gradients match finite differences across width changes") {
    std::mt19937_64 rng(23);
    NetSpec net;
    LayerSpec La, Lb, Lc;
    La.dyn = random_layer(rng, 4, 10, DeviceKind::Tanh2, 1, 0.7);
    La.cfg = {Method::ForwardEuler, 24, 0.7};
    Lb.dyn = random_layer(rng, 6, 14, DeviceKind::Tanh2, 0, 0.7);
    Lb.cfg = {Method::ForwardEuler, 24, 0.9};
    Lc.dyn = random_layer(rng, 3, 7, DeviceKind::Tanh2, 1, 0.7);
    Lc.cfg = {Method::ForwardEuler, 24, 0.6};
    net.layers = {La, Lb, Lc};
    net.input_nodes = {0, 1, 2, 3};
    net.readout_nodes = {0, 1, 2};

    std::vector<double> x = random_state(rng, 4);
    std::vector<double> c = random_state(rng, 3);

    ForwardTrace trace;
    forward_full(net, x, false, &trace);
    std::vector<double> seed(3, 0.0);
    for (int i = 0; i < 3; ++i) seed[net.readout_nodes[i]] = c[i];
    NetBackwardResult adj = net_backward(net, trace, seed);

    auto loss = [&](const NetSpec& probe) {
        const std::vector<double> y = forward(probe, x);
        double s = 0.0;
        for (size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
        return s;
    };
    const std::vector<double> fd = finite_diff_grad(net, loss, 1e-5);
    REQUIRE(fd.size() == adj.grad_params.size());
    for (size_t i = 0; i < fd.size(); ++i) CHECK(rel_err(adj.grad_params[i], fd[i]) < 1e-4);

    // Input gradient: perturb each embedded input coordinate.
    for (int i = 0; i < 4; ++i) {
        std::vector<double> xu = x, xd = x;
        xu[i] += 1e-5;
        xd[i] -= 1e-5;
        auto lv = [&](const std::vector<double>& xx) {
            const std::vector<double> y = forward(net, xx);
            double s = 0.0;
            for (size_t j = 0; j < y.size(); ++j) s += c[j] * y[j];
            return s;
        };
        const double fdx = (lv(xu) - lv(xd)) / 2e-5;
        CHECK(rel_err(adj.grad_v_start[net.input_nodes[i]], fdx) < 1e-4);
    }
}

TEST_CASE("log-density matches the dense jacobian oracle") {
    for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
        NetSpec net = small_flow_net(seed);
        std::mt19937_64 rng(seed * 7 + 1);
        std::vector<double> eps = random_state(rng, 2);

        std::vector<double> x;
        const double logdet = dense_logabsdet(net, eps, &x);
        const double ref_logq = std_normal_logpdf(eps) - logdet;

        FlowResult fwd = flow_forward(net, eps);
        CHECK(rel_err(fwd.logq, ref_logq) < 1e-3);
        CHECK(std::fabs(fwd.x[0] - x[0]) < 1e-9);
        CHECK(std::fabs(fwd.x[1] - x[1]) < 1e-9);

        // Reverse evaluation at the pushed-forward point agrees too, and
        // recovers the base draw.
        FlowResult rev = flow_reverse(net, fwd.x);
        CHECK(rel_err(rev.logq, ref_logq) < 1e-3);
        CHECK(std::fabs(rev.eps[0] - eps[0]) < 1e-6);
        CHECK(std::fabs(rev.eps[1] - eps[1]) < 1e-6);
        CHECK(forward_logdensity(net, fwd.x) == rev.logq);
    }
}

TEST_CASE("modelled density is normalized and self-consistent") {
    NetSpec net = small_flow_net(42);

    // Trapezoid quadrature of q and q*log q on [-4,4]^2.
    const int m = 200;
    const double lo = -4.0, hi = 4.0;
    const double h = (hi - lo) / (m - 1);
    double z = 0.0, ce = 0.0;
    for (int i = 0; i < m; ++i) {
        const double wi = (i == 0 || i == m - 1) ? 0.5 : 1.0;
        for (int j = 0; j < m; ++j) {
            const double wj = (j == 0 || j == m - 1) ? 0.5 : 1.0;
            const std::vector<double> x = {lo + i * h, lo + j * h};
            const double logq = forward_logdensity(net, x);
            const double q = std::exp(logq);
            z += wi * wj * q;
            ce += wi * wj * q * logq;
        }
    }
    z *= h * h;
    ce *= h * h;
    CHECK(std::fabs(z - 1.0) < 2e-2);

    // Mean log-density over fresh samples vs the quadrature cross-entropy.
    const int n_samples = 10000;
    double mean_logq = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const std::vector<double> x = sample(net, 1000 + s);
        const double logq = forward_logdensity(net, x);
        REQUIRE(std::isfinite(logq));
        mean_logq += logq;
    }
    mean_logq /= n_samples;
    const double ref = ce / z;
    CHECK(std::fabs(mean_logq - ref) / std::fabs(ref) < 0.05);
}

TEST_CASE("zero dynamics sampling reproduces the base distribution") {
    std::mt19937_64 seed_rng(5);
    NetSpec net;
    LayerSpec L;
    L.dyn.topo = fc_topo(2, 1);
    L.dyn.kind = DeviceKind::ReLU2;
    L.dyn.params.assign(L.dyn.param_dim(), 0.0);
    L.cfg = {Method::ForwardEuler, 4, 1.0};
    net.layers = {L};
    net.input_nodes = {0, 1};
    net.readout_nodes = {0, 1};

    // Determinism: one seed, one sample.
    double lq1 = 0.0, lq2 = 0.0;
    const std::vector<double> s1 = sample(net, 99, &lq1);
    const std::vector<double> s2 = sample(net, 99, &lq2);
    CHECK(s1 == s2);
    CHECK(lq1 == lq2);
    CHECK(sample(net, 100) != s1);

    // Identity flow: logq is the standard-normal log-density of the sample.
    CHECK(lq1 == doctest::Approx(std_normal_logpdf(s1)).epsilon(1e-15));

    double mean0 = 0.0, mean1 = 0.0, var0 = 0.0, var1 = 0.0;
    const int n = 2000;
    for (int s = 0; s < n; ++s) {
        const std::vector<double> x = sample(net, seed_rng());
        mean0 += x[0];
        mean1 += x[1];
        var0 += x[0] * x[0];
        var1 += x[1] * x[1];
    }
    mean0 /= n;
    mean1 /= n;
    var0 = var0 / n - mean0 * mean0;
    var1 = var1 / n - mean1 * mean1;
    CHECK(std::fabs(mean0) < 0.08);
    CHECK(std::fabs(mean1) < 0.08);
    CHECK(var0 > 0.85);
    CHECK(var0 < 1.15);
    CHECK(var1 > 0.85);
    CHECK(var1 < 1.15);
}

TEST_CASE("flow log-density gradients match finite differences") {
    // Forward direction: d logq(flow_forward(eps)) / d params.
    NetSpec net = small_flow_net(77, Method::ForwardEuler);
    for (LayerSpec& L : net.layers) L.cfg.steps = 32;
    std::mt19937_64 rng(78);
    const std::vector<double> eps = random_state(rng, 2);

    ForwardTrace trace;
    FlowResult fwd = flow_forward(net, eps, &trace);
    (void)fwd;
    NetBackwardResult adj =
        net_backward(net, trace, std::vector<double>{0.0, 0.0}, 1.0);
    auto loss_fwd = [&](const NetSpec& probe) { return flow_forward(probe, eps).logq; };
    std::vector<double> fd = finite_diff_grad(net, loss_fwd, 1e-5);
    for (size_t i = 0; i < fd.size(); ++i) CHECK(rel_err(adj.grad_params[i], fd[i]) < 1e-3);

    // Reverse direction: d logq(x) / d params, the generation-NLL path.
    const std::vector<double> x = {0.7, -0.4};
    ForwardTrace rtrace;
    flow_reverse(net, x, &rtrace);
    std::vector<double> seed_v(rtrace.v_end.size());
    for (size_t i = 0; i < seed_v.size(); ++i) seed_v[i] = -rtrace.v_end[i];
    NetBackwardResult radj = net_backward(net, rtrace, seed_v, -1.0);
    auto loss_rev = [&](const NetSpec& probe) { return forward_logdensity(probe, x); };
    fd = finite_diff_grad(net, loss_rev, 1e-5);
    for (size_t i = 0; i < fd.size(); ++i) CHECK(rel_err(radj.grad_params[i], fd[i]) < 1e-3);
}

TEST_CASE("checkpoints round-trip bit-for-bit") {
    std::mt19937_64 rng(31);
    NetSpec net;
    LayerSpec L1;
    L1.dyn = random_layer(rng, 5, 12, DeviceKind::Tanh3, 2);
    L1.dyn.theta_cap = 2.5;
    L1.cfg = {Method::RK4, 7, 0.3};
    LayerSpec L2;
    L2.dyn = random_layer(rng, 4, 9, DeviceKind::Tanh3);
    L2.cfg = {Method::RK4, 11, 1.7};
    net.layers = {L1, L2};
    net.input_nodes = {2, 0, 1};
    net.readout_nodes = {3, 1};

    const std::string path = temp_path("knet_test_ckpt.json");
    save_checkpoint(net, path);
    const NetSpec back = load_checkpoint(path);

    CHECK(back.layers.size() == 2);
    CHECK(back.layers[0].dyn.topo == net.layers[0].dyn.topo);
    CHECK(back.layers[1].dyn.topo == net.layers[1].dyn.topo);
    CHECK(back.layers[0].dyn.theta_cap == 2.5);
    CHECK(back.layers[1].dyn.theta_cap == 1.0);
    CHECK(back.layers[0].cfg.T == net.layers[0].cfg.T);
    CHECK(back.layers[0].cfg.steps == 7);
    CHECK(back.layers[0].cfg.method == Method::RK4);
    CHECK(back.gather_params() == net.gather_params());
    CHECK(back.input_nodes == net.input_nodes);
    CHECK(back.readout_nodes == net.readout_nodes);

    const std::vector<double> x = random_state(rng, 3);
    CHECK(forward(net, x) == forward(back, x));
    std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected whole") {
    std::mt19937_64 rng(37);
    NetSpec net = two_node_conductance_net(0.5);
    const std::string path = temp_path("knet_test_ckpt_bad.json");
    save_checkpoint(net, path);

    std::string text;
    {
        std::ifstream in(path);
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    SUBCASE("truncated file") {
        std::ofstream(path) << text.substr(0, text.size() / 2);
        CHECK_THROWS_AS(load_checkpoint(path), config_error);
    }
    SUBCASE("unknown version") {
        std::string bumped = text;
        bumped.replace(bumped.find("\"version\": 1"), 12, "\"version\": 9");
        std::ofstream(path) << bumped;
        CHECK_THROWS_AS(load_checkpoint(path), config_error);
    }
    SUBCASE("not json at all") {
        std::ofstream(path) << "nodes 2\nedge 0 1\n";
        CHECK_THROWS_AS(load_checkpoint(path), config_error);
    }
    SUBCASE("missing file") {
        std::filesystem::remove(path);
        CHECK_THROWS_AS(load_checkpoint(path), config_error);
    }
    std::filesystem::remove(path);
}

TEST_CASE("standard normal log-density reference values") {
    CHECK(std_normal_logpdf(std::vector<double>{0.0, 0.0}) ==
          doctest::Approx(-1.8378770664093453).epsilon(1e-15));
    CHECK(std_normal_logpdf(std::vector<double>{1.0}) ==
          doctest::Approx(-1.4189385332046727).epsilon(1e-15));
}

TEST_CASE("nets reject malformed wiring") {
    NetSpec net = two_node_conductance_net(0.5);
    CHECK_NOTHROW(check_net(net));

    NetSpec empty;
    CHECK_THROWS_AS(check_net(empty), std::invalid_argument);

    NetSpec dup = net;
    dup.input_nodes = {0, 0};
    CHECK_THROWS_AS(check_net(dup), std::invalid_argument);

    NetSpec oob = net;
    oob.readout_nodes = {2};
    CHECK_THROWS_AS(check_net(oob), std::invalid_argument);

    NetSpec mixed = net;
    mixed.layers.push_back(mixed.layers[0]);
    mixed.layers[1].cfg.method = Method::RK4;
    CHECK_THROWS_AS(check_net(mixed), std::invalid_argument);

    NetSpec rev = net;
    rev.layers[0].cfg.reversed = true;
    CHECK_THROWS_AS(check_net(rev), std::invalid_argument);

    CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), std::invalid_argument);

    // Flow nets: constant width, full coverage.
    NetSpec partial = net;
    partial.readout_nodes = {1};
    CHECK_THROWS_AS(check_flow_net(partial), std::invalid_argument);
    NetSpec widths = net;
    widths.layers.push_back(widths.layers[0]);
    widths.layers[1].dyn.topo.num_nodes = 3;
    widths.layers[1].dyn.topo.edges = {{0, 1}, {1, 2}};
    widths.layers[1].dyn.params = {0.1, 0.2};
    CHECK_THROWS_AS(check_flow_net(widths), std::invalid_argument);

    // Backward seeds must line up with the recorded trace.
    ForwardTrace trace;
    forward_full(net, std::vector<double>{1.0, 0.0}, false, &trace);
    CHECK_THROWS_AS(net_backward(net, trace, std::vector<double>{1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(net_backward(net, trace, std::vector<double>{1.0, 0.0}, 1.0),
                    std::invalid_argument);
    ForwardTrace none;
    CHECK_THROWS_AS(net_backward(net, none, std::vector<double>{1.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("built-in gradient check passes for every device kind") {
    const std::vector<GradCheckReport> reports = run_gradcheck(1234, 5);
    REQUIRE(reports.size() == 6);
    for (const GradCheckReport& rep : reports) {
        INFO("kind ", kind_name(rep.kind));
        CHECK(rep.params_checked > 50);
        CHECK(rep.max_rel_err < 1e-4);
    }
}
