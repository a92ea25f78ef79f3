#include "knet/model.hpp"

#include "knet/errors.hpp"
#include "knet/fsio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace knet {

namespace {

using nlohmann::json;

void check_index_list(const std::vector<int>& idx, int n, const char* what) {
    if (idx.empty()) throw std::invalid_argument(std::string(what) + ": must not be empty");
    std::set<int> seen;
    for (int i : idx) {
        if (i < 0 || i >= n)
            throw std::invalid_argument(std::string(what) + ": node index out of range");
        if (!seen.insert(i).second)
            throw std::invalid_argument(std::string(what) + ": duplicate node index");
    }
}

// Grow or shrink the state between layers: carried nodes keep their voltage,
// added nodes start at 0, dropped values disappear.
std::vector<double> transition(std::vector<double> v, int width) {
    if (static_cast<int>(v.size()) == width) return v;
    std::vector<double> nv(width, 0.0);
    std::copy_n(v.begin(), std::min<size_t>(v.size(), width), nv.begin());
    return nv;
}

}  // namespace

double NetSpec::total_horizon() const {
    double t = 0.0;
    for (const LayerSpec& l : layers) t += l.cfg.T;
    return t;
}

size_t NetSpec::param_dim() const {
    size_t d = 0;
    for (const LayerSpec& l : layers) d += l.dyn.param_dim();
    return d;
}

std::vector<double> NetSpec::gather_params() const {
    std::vector<double> p;
    p.reserve(param_dim());
    for (const LayerSpec& l : layers)
        p.insert(p.end(), l.dyn.params.begin(), l.dyn.params.end());
    return p;
}

void NetSpec::scatter_params(std::span<const double> p) {
    if (p.size() != param_dim())
        throw std::invalid_argument("scatter_params: global vector size mismatch");
    size_t off = 0;
    for (LayerSpec& l : layers) {
        std::copy(p.begin() + off, p.begin() + off + l.dyn.params.size(), l.dyn.params.begin());
        off += l.dyn.params.size();
    }
}

void check_net(const NetSpec& net) {
    if (net.layers.empty()) throw std::invalid_argument("net: needs at least one layer");
    for (const LayerSpec& l : net.layers) {
        check_dynamics(l.dyn);
        if (l.cfg.steps < 1) throw std::invalid_argument("net: layer steps must be >= 1");
        if (!(l.cfg.T > 0.0)) throw std::invalid_argument("net: layer horizon must be positive");
        if (l.cfg.method != net.layers.front().cfg.method)
            throw std::invalid_argument("net: all layers must share one integration method");
        if (l.cfg.reversed)
            throw std::invalid_argument("net: layer configs are stored in forward direction");
    }
    check_index_list(net.input_nodes, net.layers.front().dyn.topo.num_nodes, "input_nodes");
    check_index_list(net.readout_nodes, net.layers.back().dyn.topo.num_nodes, "readout_nodes");
}

void check_flow_net(const NetSpec& net) {
    check_net(net);
    const int n = net.layers.front().dyn.topo.num_nodes;
    for (const LayerSpec& l : net.layers)
        if (l.dyn.topo.num_nodes != n)
            throw std::invalid_argument("flow net: node count must be constant across layers");
    if (static_cast<int>(net.input_nodes.size()) != n ||
        static_cast<int>(net.readout_nodes.size()) != n)
        throw std::invalid_argument("flow net: input and readout must cover every node");
}

std::vector<double> forward_full(const NetSpec& net, std::span<const double> x, bool with_logp,
                                 ForwardTrace* trace) {
    check_net(net);
    if (x.size() != net.input_nodes.size())
        throw std::invalid_argument("forward: input size mismatch");

    std::vector<double> v(net.layers.front().dyn.topo.num_nodes, 0.0);
    for (size_t i = 0; i < x.size(); ++i) v[net.input_nodes[i]] = x[i];
    double lp = 0.0;
    if (trace) {
        trace->segments.clear();
        trace->with_logp = with_logp;
    }

    for (int li = 0; li < net.depth(); ++li) {
        const LayerSpec& L = net.layers[li];
        v = transition(std::move(v), L.dyn.topo.num_nodes);
        NodeState in{std::move(v), {}};
        if (with_logp) in.logp_delta = lp;
        Trajectory traj;
        NodeState out = integrate(L.dyn, in, L.cfg, with_logp, trace ? &traj : nullptr);
        if (trace) trace->segments.push_back({li, L.cfg, std::move(traj)});
        v = std::move(out.v);
        if (with_logp) lp = *out.logp_delta;
    }

    if (trace) {
        trace->v_end = v;
        trace->logp_delta = lp;
    }
    std::vector<double> y(net.readout_nodes.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = v[net.readout_nodes[i]];
    return y;
}

std::vector<double> forward(const NetSpec& net, std::span<const double> x) {
    return forward_full(net, x, false, nullptr);
}

NetBackwardResult net_backward(const NetSpec& net, const ForwardTrace& trace,
                               std::span<const double> dL_dv_end,
                               std::optional<double> dL_dlogp) {
    check_net(net);
    if (trace.segments.empty()) throw std::invalid_argument("net_backward: empty trace");
    if (dL_dlogp.has_value() && !trace.with_logp)
        throw std::invalid_argument(
            "net_backward: log-density seed needs a trace recorded with the channel on");

    std::vector<size_t> offset(net.depth() + 1, 0);
    for (int li = 0; li < net.depth(); ++li)
        offset[li + 1] = offset[li] + net.layers[li].dyn.params.size();

    NetBackwardResult res;
    res.grad_params.assign(offset.back(), 0.0);

    const auto& segs = trace.segments;
    const int end_width = net.layers[segs.back().layer].dyn.topo.num_nodes;
    if (static_cast<int>(dL_dv_end.size()) != end_width)
        throw std::invalid_argument("net_backward: seed width mismatch");

    std::vector<double> a(dL_dv_end.begin(), dL_dv_end.end());
    for (int si = static_cast<int>(segs.size()) - 1; si >= 0; --si) {
        const ForwardTrace::Segment& seg = segs[si];
        const LayerDynamics& dyn = net.layers[seg.layer].dyn;
        BackwardResult br = backward(dyn, seg.traj, seg.cfg, a, dL_dlogp);
        for (size_t i = 0; i < br.grad_params.size(); ++i)
            res.grad_params[offset[seg.layer] + i] += br.grad_params[i];
        a = std::move(br.grad_v0);
        if (si > 0) {
            const int prev_width = net.layers[segs[si - 1].layer].dyn.topo.num_nodes;
            a = transition(std::move(a), prev_width);
        }
    }
    res.grad_v_start = std::move(a);
    return res;
}

double std_normal_logpdf(std::span<const double> v) {
    double q = 0.0;
    for (double x : v) q += x * x;
    return -0.5 * q - 0.5 * static_cast<double>(v.size()) * std::log(2.0 * std::numbers::pi);
}

FlowResult flow_forward(const NetSpec& net, std::span<const double> eps, ForwardTrace* trace) {
    check_flow_net(net);
    FlowResult res;
    res.eps.assign(eps.begin(), eps.end());
    ForwardTrace local;
    ForwardTrace* tr = trace ? trace : &local;
    res.x = forward_full(net, eps, true, tr);
    res.logq = std_normal_logpdf(eps) + tr->logp_delta;
    return res;
}

FlowResult flow_reverse(const NetSpec& net, std::span<const double> x, ForwardTrace* trace) {
    check_flow_net(net);
    if (x.size() != net.readout_nodes.size())
        throw std::invalid_argument("flow_reverse: data point size mismatch");

    const int n = net.layers.front().dyn.topo.num_nodes;
    std::vector<double> v(n, 0.0);
    for (size_t i = 0; i < x.size(); ++i) v[net.readout_nodes[i]] = x[i];
    double lp = 0.0;

    ForwardTrace local;
    ForwardTrace* tr = trace ? trace : &local;
    tr->segments.clear();
    tr->with_logp = true;

    for (int li = net.depth() - 1; li >= 0; --li) {
        const LayerSpec& L = net.layers[li];
        IntegratorConfig cfg = L.cfg;
        cfg.reversed = true;
        NodeState in{std::move(v), lp};
        Trajectory traj;
        NodeState out = integrate(L.dyn, in, cfg, true, &traj);
        tr->segments.push_back({li, cfg, std::move(traj)});
        v = std::move(out.v);
        lp = *out.logp_delta;
    }
    tr->v_end = v;
    tr->logp_delta = lp;

    FlowResult res;
    res.x.assign(x.begin(), x.end());
    res.eps.resize(net.input_nodes.size());
    for (size_t i = 0; i < res.eps.size(); ++i) res.eps[i] = v[net.input_nodes[i]];
    res.logq = std_normal_logpdf(v) - lp;
    return res;
}

double forward_logdensity(const NetSpec& net, std::span<const double> x) {
    return flow_reverse(net, x).logq;
}

std::vector<double> sample(const NetSpec& net, std::uint64_t seed, double* logq) {
    check_flow_net(net);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> eps(net.input_nodes.size());
    for (double& e : eps) e = normal(rng);
    FlowResult res = flow_forward(net, eps);
    if (logq) *logq = res.logq;
    return res.x;
}

void save_checkpoint(const NetSpec& net, const std::string& path) {
    check_net(net);
    json j;
    j["version"] = 1;
    j["method"] = std::string(method_name(net.layers.front().cfg.method));
    json layers = json::array();
    for (const LayerSpec& L : net.layers) {
        json jl;
        jl["nodes"] = L.dyn.topo.num_nodes;
        json edges = json::array();
        for (const Edge& e : L.dyn.topo.edges) edges.push_back({e.src, e.dst});
        jl["edges"] = std::move(edges);
        jl["gedges"] = L.dyn.topo.ground_edges;
        jl["kind"] = std::string(kind_name(L.dyn.kind));
        jl["T"] = L.cfg.T;
        jl["steps"] = L.cfg.steps;
        jl["params"] = L.dyn.params;
        if (L.dyn.theta_cap != 1.0) jl["theta_cap"] = L.dyn.theta_cap;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    j["input_nodes"] = net.input_nodes;
    j["readout_nodes"] = net.readout_nodes;
    write_text_atomic(path, j.dump(1));
}

NetSpec load_checkpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw config_error("checkpoint '" + path + "': " + e.what());
    }
    try {
        if (!j.contains("version"))
            throw config_error("checkpoint '" + path + "': missing version field");
        const int version = j.at("version").get<int>();
        if (version != 1)
            throw config_error("checkpoint '" + path + "': unsupported version " +
                               std::to_string(version));
        NetSpec net;
        const Method method = method_from_name(j.at("method").get<std::string>());
        for (const auto& jl : j.at("layers")) {
            LayerSpec L;
            L.dyn.topo.num_nodes = jl.at("nodes").get<int>();
            for (const auto& je : jl.at("edges"))
                L.dyn.topo.edges.push_back({je.at(0).get<int>(), je.at(1).get<int>()});
            L.dyn.topo.ground_edges = jl.at("gedges").get<std::vector<int>>();
            L.dyn.kind = kind_from_name(jl.at("kind").get<std::string>());
            L.dyn.params = jl.at("params").get<std::vector<double>>();
            L.dyn.theta_cap = jl.value("theta_cap", 1.0);
            L.cfg.method = method;
            L.cfg.T = jl.at("T").get<double>();
            L.cfg.steps = jl.at("steps").get<int>();
            net.layers.push_back(std::move(L));
        }
        net.input_nodes = j.at("input_nodes").get<std::vector<int>>();
        net.readout_nodes = j.at("readout_nodes").get<std::vector<int>>();
        check_net(net);
        return net;
    } catch (const json::exception& e) {
        throw config_error("checkpoint '" + path + "': " + e.what());
    }
}

std::vector<double> finite_diff_grad(const NetSpec& net,
                                     const std::function<double(const NetSpec&)>& loss,
                                     double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
    std::vector<double> p = net.gather_params();
    std::vector<double> grad(p.size());
    NetSpec probe = net;
    for (size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + eps;
        probe.scatter_params(p);
        const double up = loss(probe);
        p[i] = keep - eps;
        probe.scatter_params(p);
        const double down = loss(probe);
        p[i] = keep;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

namespace {

double relu_preact(DeviceKind k, double v_s, double v_d, std::span<const double> th) {
    return k == DeviceKind::ReLU2 ? th[0] * (v_s - v_d) + th[1]
                                  : th[0] * v_s + th[1] * v_d + th[2];
}

// Activation pattern over every euler evaluation point of every segment.
std::vector<uint8_t> net_relu_signature(const NetSpec& net, std::span<const double> x) {
    ForwardTrace trace;
    forward_full(net, x, false, &trace);
    std::vector<uint8_t> sig;
    for (const ForwardTrace::Segment& seg : trace.segments) {
        const LayerDynamics& dyn = net.layers[seg.layer].dyn;
        for (int k = 0; k < seg.cfg.steps; ++k) {
            const std::vector<double>& v = seg.traj.states[k];
            for (size_t e = 0; e < dyn.topo.edges.size(); ++e) {
                const Edge& ed = dyn.topo.edges[e];
                sig.push_back(relu_preact(dyn.kind, v[ed.src], v[ed.dst], dyn.edge_params(e)) >
                              0);
            }
            for (size_t g = 0; g < dyn.topo.ground_edges.size(); ++g)
                sig.push_back(relu_preact(dyn.kind, v[dyn.topo.ground_edges[g]], 0.0,
                                          dyn.ground_params(g)) > 0);
        }
    }
    return sig;
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck(std::uint64_t seed, int nets_per_kind) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.8, 0.8);
    std::uniform_real_distribution<double> horizon(0.5, 1.2);
    const double eps = 1e-5;

    std::vector<GradCheckReport> reports;
    for (DeviceKind kind : {DeviceKind::Source, DeviceKind::Conductance, DeviceKind::ReLU2,
                            DeviceKind::Tanh2, DeviceKind::ReLU3, DeviceKind::Tanh3}) {
        GradCheckReport rep;
        rep.kind = kind;
        const bool relu = kind == DeviceKind::ReLU2 || kind == DeviceKind::ReLU3;

        for (int n = 0; n < nets_per_kind; ++n) {
            const int depth = 1 + static_cast<int>(rng() % 3);
            NetSpec net;
            for (int li = 0; li < depth; ++li) {
                LayerSpec L;
                const int width = 3 + static_cast<int>(rng() % 6);
                L.dyn.kind = kind;
                L.dyn.topo.num_nodes = width;
                const int n_edges = 6 + static_cast<int>(rng() % 19);
                std::uniform_int_distribution<int> node(0, width - 1);
                for (int e = 0; e < n_edges; ++e) {
                    int s = node(rng), d = node(rng);
                    while (d == s) d = node(rng);
                    L.dyn.topo.edges.push_back({s, d});
                }
                if (rng() % 2) L.dyn.topo.ground_edges.push_back(node(rng));
                L.dyn.params.resize(L.dyn.param_dim());
                for (double& p : L.dyn.params) p = unit(rng);
                L.cfg = {Method::ForwardEuler, 32, horizon(rng)};
                net.layers.push_back(std::move(L));
            }
            const int in_w = net.layers.front().dyn.topo.num_nodes;
            const int out_w = net.layers.back().dyn.topo.num_nodes;
            for (int i = 0; i < in_w; ++i) net.input_nodes.push_back(i);
            for (int i = 0; i < out_w; ++i) net.readout_nodes.push_back(i);

            std::vector<double> x(in_w);
            for (double& xi : x) xi = unit(rng);

            ForwardTrace trace;
            forward_full(net, x, false, &trace);
            NetBackwardResult adj = net_backward(net, trace, trace.v_end);

            auto loss = [&x](const NetSpec& probe) {
                ForwardTrace t;
                forward_full(probe, x, false, &t);
                double s = 0.0;
                for (double v : t.v_end) s += 0.5 * v * v;
                return s;
            };
            std::vector<double> fd = finite_diff_grad(net, loss, eps);

            std::vector<double> p = net.gather_params();
            NetSpec probe = net;
            for (size_t i = 0; i < fd.size(); ++i) {
                if (relu) {
                    std::vector<double> pu = p, pd = p;
                    pu[i] += eps;
                    pd[i] -= eps;
                    probe.scatter_params(pu);
                    const auto sig_up = net_relu_signature(probe, x);
                    probe.scatter_params(pd);
                    const auto sig_down = net_relu_signature(probe, x);
                    if (sig_up != sig_down) {
                        ++rep.params_skipped;
                        continue;
                    }
                }
                const double err = std::fabs(adj.grad_params[i] - fd[i]) /
                                   std::max({1.0, std::fabs(adj.grad_params[i]),
                                             std::fabs(fd[i])});
                rep.max_rel_err = std::max(rep.max_rel_err, err);
                ++rep.params_checked;
            }
        }
        reports.push_back(rep);
    }
    return reports;
}

}  // namespace knet
