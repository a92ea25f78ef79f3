#pragma once

#include "knet/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace knet {

using Matrix = std::vector<std::vector<double>>;
// Unnormalized density handle; must be evaluable (and > 0) wherever the model
// puts mass.
using DensityFn = std::function<double(std::span<const double>)>;

// ---- losses ----------------------------------------------------------------

// Mean over the batch of the per-sample mean squared error.
double loss_l2(const Matrix& pred, const Matrix& target);

// Softmax cross-entropy, mean over the batch, stabilized by max-subtraction.
double loss_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// -mean log q(x_i), each term evaluated by a reverse pass through the flow.
double loss_nll_generation(const NetSpec& net, const Matrix& xs);

// mean of [log q(x_i) - log u(x_i)] over x_i sampled from the model with a
// seeded engine; equals KL(q || u/Z) up to the constant log Z.
double loss_density_matching(const NetSpec& net, const DensityFn& u, int batch_size,
                             std::uint64_t seed);

// Central-difference gradient of log u; throws std::domain_error when a probe
// point has u <= 0.
std::vector<double> grad_log_density(const DensityFn& u, std::span<const double> x,
                                     double h = 1e-5);

// ---- optimizers --------------------------------------------------------------

enum class OptKind { SGD, AdamW };

struct OptimizerConfig {
    OptKind kind = OptKind::AdamW;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled (AdamW style)
};

class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    // One update in place; lr_now overrides cfg.lr so schedules can drive it.
    // Non-finite gradients throw numeric_error.
    void step(std::vector<double>& params, std::span<const double> grads, double lr_now);
    void step(std::vector<double>& params, std::span<const double> grads) {
        step(params, grads, cfg_.lr);
    }

    const OptimizerConfig& config() const { return cfg_; }
    long long steps_taken() const { return t_; }

  private:
    OptimizerConfig cfg_;
    long long t_ = 0;
    std::vector<double> m_, v_;
};

// lr_max * 0.5 * (1 + cos(pi * step / total_steps)); steps past the end clamp
// to 0.
double cosine_lr(long long step, long long total_steps, double lr_max);

// Scales grads in place when their global L2 norm exceeds max_norm; returns
// the pre-clip norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

// I.i.d. uniform on [-1/sqrt(fan), 1/sqrt(fan)] per parameter, where fan is
// the number of devices touching the edge's destination node (ground edges
// count theirs at the node itself).
void init_params(NetSpec& net, std::uint64_t seed);

// ---- training loop -----------------------------------------------------------

enum class LossKind { L2, CrossEntropy, NllGeneration, DensityMatching };

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);

struct TrainConfig {
    LossKind loss = LossKind::L2;
    int epochs = 0;
    int batch_size = 64;
    double lr = 1e-3;
    OptKind optimizer = OptKind::AdamW;
    double weight_decay = 0.0;
    bool cosine_schedule = true;
    double clip_norm = 100.0;
    std::uint64_t seed = 0;
    // Density matching has no finite dataset; an epoch is this many estimator
    // batches, and the logged metric uses eval_batch fresh draws.
    int batches_per_epoch = 10;
    int eval_batch = 1024;
};

struct EpochMetric {
    int epoch = 0;
    double train_loss = 0.0;
    double test_metric = 0.0;
    double lr = 0.0;
    double wall_clock_s = 0.0;
};

struct TrainResult {
    NetSpec net;  // parameters of the best test metric (final epoch if no test data)
    std::vector<EpochMetric> log;
    double best_metric = 0.0;
    int best_epoch = -1;
    int clip_events = 0;  // batches whose gradient norm hit the clip
};

// All loops are deterministic given cfg.seed (shuffles and base draws included)
// and mean per-sample gradients over each batch. Divergence aborts with
// epoch/step context on the exception message.
TrainResult train_regression(NetSpec net, const Matrix& x_train, const Matrix& y_train,
                             const Matrix& x_test, const Matrix& y_test,
                             const TrainConfig& cfg);
TrainResult train_classification(NetSpec net, const Matrix& x_train,
                                 const std::vector<int>& y_train, const Matrix& x_test,
                                 const std::vector<int>& y_test, const TrainConfig& cfg);
TrainResult train_generation(NetSpec net, const Matrix& x_train, const Matrix& x_test,
                             const TrainConfig& cfg);
TrainResult train_density(NetSpec net, const DensityFn& u, const TrainConfig& cfg);

// Top-1 accuracy of argmax logits.
double classification_accuracy(const NetSpec& net, const Matrix& x, const std::vector<int>& y);

// Metric log as CSV: epoch,train_loss,test_metric,lr,wall_clock_s.
void write_metrics_csv(const std::string& path, const std::vector<EpochMetric>& log);

}  // namespace knet
