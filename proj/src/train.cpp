#include "knet/train.hpp"

#include "knet/errors.hpp"
#include "knet/fsio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace knet {

namespace {

constexpr std::uint64_t kEvalSeedSalt = 0x9e3779b97f4a7c15ull;

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_batch(const Matrix& pred, size_t batch, const char* what) {
    if (pred.size() != batch) throw std::invalid_argument(std::string(what) + ": batch size mismatch");
}

}  // namespace

double loss_l2(const Matrix& pred, const Matrix& target) {
    check_batch(target, pred.size(), "loss_l2");
    if (pred.empty()) throw std::invalid_argument("loss_l2: empty batch");
    double total = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != target[i].size() || pred[i].empty())
            throw std::invalid_argument("loss_l2: sample length mismatch");
        double s = 0.0;
        for (size_t j = 0; j < pred[i].size(); ++j) {
            const double d = pred[i][j] - target[i][j];
            s += d * d;
        }
        total += s / static_cast<double>(pred[i].size());
    }
    return total / static_cast<double>(pred.size());
}

namespace {

// Per-sample softmax cross-entropy and its logit gradient.
double ce_term(std::span<const double> logits, int label, std::vector<double>* d_logits) {
    if (label < 0 || label >= static_cast<int>(logits.size()))
        throw std::invalid_argument("cross_entropy: label out of range");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double lse = mx + std::log(z);
    if (d_logits) {
        d_logits->resize(logits.size());
        for (size_t j = 0; j < logits.size(); ++j) (*d_logits)[j] = std::exp(logits[j] - mx) / z;
        (*d_logits)[label] -= 1.0;
    }
    return lse - logits[label];
}

}  // namespace

double loss_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.size() != labels.size()) throw std::invalid_argument("cross_entropy: batch size mismatch");
    if (logits.empty()) throw std::invalid_argument("cross_entropy: empty batch");
    double total = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) total += ce_term(logits[i], labels[i], nullptr);
    return total / static_cast<double>(logits.size());
}

double loss_nll_generation(const NetSpec& net, const Matrix& xs) {
    if (xs.empty()) throw std::invalid_argument("nll_generation: empty batch");
    double total = 0.0;
    for (const std::vector<double>& x : xs) total -= forward_logdensity(net, x);
    return total / static_cast<double>(xs.size());
}

double loss_density_matching(const NetSpec& net, const DensityFn& u, int batch_size,
                             std::uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("density_matching: batch_size must be >= 1");
    check_flow_net(net);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const size_t d = net.input_nodes.size();
    double total = 0.0;
    for (int s = 0; s < batch_size; ++s) {
        std::vector<double> eps(d);
        for (double& e : eps) e = normal(rng);
        const FlowResult r = flow_forward(net, eps);
        const double ux = u(r.x);
        if (!(ux > 0.0)) throw std::domain_error("density_matching: target density not positive at a sampled point");
        total += r.logq - std::log(ux);
    }
    return total / batch_size;
}

std::vector<double> grad_log_density(const DensityFn& u, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_log_density: h must be positive");
    std::vector<double> g(x.size());
    std::vector<double> probe(x.begin(), x.end());
    for (size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = u(probe);
        probe[i] = x[i] - h;
        const double dn = u(probe);
        probe[i] = x[i];
        if (!(up > 0.0) || !(dn > 0.0))
            throw std::domain_error("grad_log_density: target density not positive at a probe point");
        // Ratio form: a constant normalizer on u cancels before the log.
        g[i] = std::log(up / dn) / (2.0 * h);
    }
    return g;
}

void Optimizer::step(std::vector<double>& params, std::span<const double> grads, double lr_now) {
    if (params.size() != grads.size()) throw std::invalid_argument("optimizer: size mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw numeric_error("optimizer: non-finite gradient");
    if (cfg_.kind == OptKind::SGD) {
        for (size_t i = 0; i < params.size(); ++i) params[i] -= lr_now * grads[i];
        ++t_;
        return;
    }
    if (m_.empty()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
    }
    if (m_.size() != params.size()) throw std::invalid_argument("optimizer: parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        // Decoupled weight decay acts on the pre-update parameter.
        params[i] -= lr_now * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * params[i]);
    }
}

double cosine_lr(long long step, long long total_steps, double lr_max) {
    if (total_steps < 1) throw std::invalid_argument("cosine_lr: total_steps must be >= 1");
    if (step < 0) throw std::invalid_argument("cosine_lr: step must be >= 0");
    if (step >= total_steps) return 0.0;
    return lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                          static_cast<double>(total_steps)));
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip_grad_norm: max_norm must be positive");
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
    return norm;
}

void init_params(NetSpec& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (LayerSpec& L : net.layers) {
        const Topology& topo = L.dyn.topo;
        std::vector<int> fan(topo.num_nodes, 0);
        for (const Edge& e : topo.edges) {
            ++fan[e.src];
            ++fan[e.dst];
        }
        for (int j : topo.ground_edges) ++fan[j];

        L.dyn.params.resize(L.dyn.param_dim());
        const int pc = param_count(L.dyn.kind);
        size_t off = 0;
        for (const Edge& e : topo.edges) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan[e.dst])));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (int p = 0; p < pc; ++p) L.dyn.params[off++] = dist(rng);
        }
        for (int j : topo.ground_edges) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan[j])));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (int p = 0; p < pc; ++p) L.dyn.params[off++] = dist(rng);
        }
    }
}

std::string loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::L2: return "l2";
        case LossKind::CrossEntropy: return "cross_entropy";
        case LossKind::NllGeneration: return "nll_generation";
        case LossKind::DensityMatching: return "density_matching";
    }
    throw std::invalid_argument("unknown loss kind");
}

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "l2") return LossKind::L2;
    if (name == "cross_entropy") return LossKind::CrossEntropy;
    if (name == "nll_generation") return LossKind::NllGeneration;
    if (name == "density_matching") return LossKind::DensityMatching;
    throw std::invalid_argument("unknown loss kind '" + name + "'");
}

namespace {

struct PerSample {
    double loss = 0.0;
    std::vector<double> grad;
};

// One (loss, param-gradient) evaluation on one training item.
using SamplePass = std::function<PerSample(const NetSpec&, int idx)>;
using EvalFn = std::function<double(const NetSpec&)>;

// Shared epoch/batch plumbing for the supervised and generation loops; the
// density loop draws its own data and reuses the update helper below.
struct UpdateState {
    std::vector<double> params;
    Optimizer opt;
    long long gstep = 0;
    long long total_steps = 1;
    double lr_used = 0.0;
};

void apply_update(NetSpec& net, UpdateState& st, std::vector<double>& grad, int count,
                  const TrainConfig& cfg, int* clip_events) {
    for (double& g : grad) g /= static_cast<double>(count);
    if (clip_grad_norm(grad, cfg.clip_norm) > cfg.clip_norm) ++(*clip_events);
    st.lr_used = cfg.cosine_schedule ? cosine_lr(st.gstep, st.total_steps, cfg.lr) : cfg.lr;
    st.opt.step(st.params, grad, st.lr_used);
    net.scatter_params(st.params);
    ++st.gstep;
}

TrainResult run_loop(NetSpec net, const TrainConfig& cfg, int n_train, const SamplePass& pass,
                     const EvalFn& eval_metric, bool higher_better) {
    check_net(net);
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (n_train < 1) throw std::invalid_argument("train: empty training set");

    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    const long long batches = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    UpdateState st{net.gather_params(),
                   Optimizer({cfg.optimizer, cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}), 0,
                   std::max<long long>(1, static_cast<long long>(cfg.epochs) * batches), cfg.lr};

    TrainResult res;
    std::vector<double> best_params = st.params;
    bool have_best = false;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (long long b = 0; b < batches; ++b) {
            const int lo = static_cast<int>(b) * cfg.batch_size;
            const int hi = std::min(n_train, lo + cfg.batch_size);
            std::vector<double> grad(st.params.size(), 0.0);
            try {
                for (int s = lo; s < hi; ++s) {
                    PerSample ps = pass(net, order[s]);
                    for (size_t i = 0; i < grad.size(); ++i) grad[i] += ps.grad[i];
                    epoch_loss += ps.loss;
                }
                apply_update(net, st, grad, hi - lo, cfg, &res.clip_events);
            } catch (const numeric_error& e) {
                throw numeric_error("epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(b) + ": " + e.what());
            }
        }
        EpochMetric row;
        row.epoch = epoch;
        row.train_loss = epoch_loss / n_train;
        row.lr = st.lr_used;
        row.test_metric = eval_metric ? eval_metric(net) : row.train_loss;
        row.wall_clock_s = elapsed_s(t0);
        res.log.push_back(row);

        const bool better = !have_best || (higher_better ? row.test_metric > res.best_metric
                                                         : row.test_metric < res.best_metric);
        if (better) {
            res.best_metric = row.test_metric;
            res.best_epoch = epoch;
            best_params = st.params;
            have_best = true;
        }
    }

    if (have_best) net.scatter_params(best_params);
    res.net = std::move(net);
    return res;
}

// Zero-filled full-width seed with per-readout entries.
std::vector<double> readout_seed(const NetSpec& net, std::span<const double> d_y) {
    std::vector<double> seed(net.layers.back().dyn.topo.num_nodes, 0.0);
    for (size_t j = 0; j < d_y.size(); ++j) seed[net.readout_nodes[j]] = d_y[j];
    return seed;
}

}  // namespace

TrainResult train_regression(NetSpec net, const Matrix& x_train, const Matrix& y_train,
                             const Matrix& x_test, const Matrix& y_test, const TrainConfig& cfg) {
    if (x_train.size() != y_train.size()) throw std::invalid_argument("train: feature/target size mismatch");
    if (x_test.size() != y_test.size()) throw std::invalid_argument("train: test feature/target size mismatch");
    SamplePass pass = [&](const NetSpec& n, int idx) {
        ForwardTrace trace;
        const std::vector<double> y = forward_full(n, x_train[idx], false, &trace);
        const std::vector<double>& t = y_train[idx];
        if (y.size() != t.size()) throw std::invalid_argument("train: target dimension mismatch");
        PerSample ps;
        const double dim = static_cast<double>(y.size());
        std::vector<double> d_y(y.size());
        for (size_t j = 0; j < y.size(); ++j) {
            const double d = y[j] - t[j];
            ps.loss += d * d / dim;
            d_y[j] = 2.0 * d / dim;
        }
        ps.grad = net_backward(n, trace, readout_seed(n, d_y)).grad_params;
        return ps;
    };
    EvalFn eval;
    if (!x_test.empty())
        eval = [&](const NetSpec& n) {
            Matrix pred;
            pred.reserve(x_test.size());
            for (const std::vector<double>& x : x_test) pred.push_back(forward(n, x));
            return loss_l2(pred, y_test);
        };
    return run_loop(std::move(net), cfg, static_cast<int>(x_train.size()), pass, eval, false);
}

TrainResult train_classification(NetSpec net, const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_test, const std::vector<int>& y_test,
                                 const TrainConfig& cfg) {
    if (x_train.size() != y_train.size()) throw std::invalid_argument("train: feature/label size mismatch");
    if (x_test.size() != y_test.size()) throw std::invalid_argument("train: test feature/label size mismatch");
    SamplePass pass = [&](const NetSpec& n, int idx) {
        ForwardTrace trace;
        const std::vector<double> logits = forward_full(n, x_train[idx], false, &trace);
        PerSample ps;
        std::vector<double> d_logits;
        ps.loss = ce_term(logits, y_train[idx], &d_logits);
        ps.grad = net_backward(n, trace, readout_seed(n, d_logits)).grad_params;
        return ps;
    };
    EvalFn eval;
    if (!x_test.empty())
        eval = [&](const NetSpec& n) { return classification_accuracy(n, x_test, y_test); };
    return run_loop(std::move(net), cfg, static_cast<int>(x_train.size()), pass, eval, true);
}

TrainResult train_generation(NetSpec net, const Matrix& x_train, const Matrix& x_test,
                             const TrainConfig& cfg) {
    check_flow_net(net);
    SamplePass pass = [&](const NetSpec& n, int idx) {
        ForwardTrace trace;
        const FlowResult r = flow_reverse(n, x_train[idx], &trace);
        PerSample ps;
        ps.loss = -r.logq;
        // -log q = -log N(v(0)) + accumulated change: seed the base state with
        // +v(0) and the channel with +1.
        std::vector<double> seed(trace.v_end);
        ps.grad = net_backward(n, trace, seed, 1.0).grad_params;
        return ps;
    };
    EvalFn eval;
    if (!x_test.empty()) eval = [&](const NetSpec& n) { return loss_nll_generation(n, x_test); };
    return run_loop(std::move(net), cfg, static_cast<int>(x_train.size()), pass, eval, false);
}

TrainResult train_density(NetSpec net, const DensityFn& u, const TrainConfig& cfg) {
    check_flow_net(net);
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (cfg.batches_per_epoch < 1) throw std::invalid_argument("train: batches_per_epoch must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const size_t dim = net.input_nodes.size();

    UpdateState st{net.gather_params(),
                   Optimizer({cfg.optimizer, cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}), 0,
                   std::max<long long>(1, static_cast<long long>(cfg.epochs) * cfg.batches_per_epoch),
                   cfg.lr};

    TrainResult res;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            std::vector<double> grad(st.params.size(), 0.0);
            try {
                for (int s = 0; s < cfg.batch_size; ++s) {
                    std::vector<double> eps(dim);
                    for (double& e : eps) e = normal(rng);
                    ForwardTrace trace;
                    const FlowResult r = flow_forward(net, eps, &trace);
                    const double ux = u(r.x);
                    if (!(ux > 0.0))
                        throw std::domain_error(
                            "density_matching: target density not positive at a sampled point");
                    epoch_loss += r.logq - std::log(ux);
                    // d/dx of -log u pulls back through the readout; the
                    // channel seed 1 covers the log q term.
                    const std::vector<double> glu = grad_log_density(u, r.x);
                    std::vector<double> d_x(glu.size());
                    for (size_t j = 0; j < glu.size(); ++j) d_x[j] = -glu[j];
                    const NetBackwardResult br =
                        net_backward(net, trace, readout_seed(net, d_x), 1.0);
                    for (size_t i = 0; i < grad.size(); ++i) grad[i] += br.grad_params[i];
                }
                apply_update(net, st, grad, cfg.batch_size, cfg, &res.clip_events);
            } catch (const numeric_error& e) {
                throw numeric_error("epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(b) + ": " + e.what());
            }
        }
        EpochMetric row;
        row.epoch = epoch;
        row.train_loss = epoch_loss / (cfg.batches_per_epoch * cfg.batch_size);
        row.lr = st.lr_used;
        row.test_metric = loss_density_matching(net, u, cfg.eval_batch, cfg.seed ^ kEvalSeedSalt);
        row.wall_clock_s = elapsed_s(t0);
        res.log.push_back(row);
        if (res.best_epoch < 0 || row.test_metric < res.best_metric) {
            res.best_metric = row.test_metric;
            res.best_epoch = epoch;
        }
    }
    // The metric is a fresh Monte-Carlo estimate; keep the final parameters
    // rather than chasing estimator noise.
    res.net = std::move(net);
    return res;
}

double classification_accuracy(const NetSpec& net, const Matrix& x, const std::vector<int>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("accuracy: feature/label size mismatch");
    if (x.empty()) throw std::invalid_argument("accuracy: empty batch");
    int hits = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const std::vector<double> logits = forward(net, x[i]);
        const int pred = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == y[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(x.size());
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetric>& log) {
    std::ostringstream out;
    out << "epoch,train_loss,test_metric,lr,wall_clock_s\n";
    char buf[128];
    for (const EpochMetric& row : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", row.epoch, row.train_loss,
                      row.test_metric, row.lr, row.wall_clock_s);
        out << buf;
    }
    write_text_atomic(path, out.str());
}

}  // namespace knet
