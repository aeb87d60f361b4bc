#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/rng.hpp"

namespace pnn {

enum class Activation { Selu, Identity };

// Standard self-normalizing constants (Klambauer et al.).
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

inline double selu(double x) {
  return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

// Derivative w.r.t. the pre-activation.
inline double selu_grad(double x) {
  return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}

inline double apply_activation(Activation a, double x) {
  return a == Activation::Selu ? selu(x) : x;
}

inline double activation_grad(Activation a, double x) {
  return a == Activation::Selu ? selu_grad(x) : 1.0;
}

// Dense feed-forward network. weights[i] is d_{i+1} x d_i, biases[i] has
// d_{i+1} entries. Hidden layers use hidden_activation; the output layer is
// always linear (regression targets are unbounded).
struct MlpModel {
  std::vector<std::size_t> layer_dims;  // [d_0, ..., d_L], L >= 1
  std::vector<Matrix2D> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::Selu;

  std::size_t n_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
};

// Glorot-uniform weights, zero biases. Tried N(0, 1/sqrt(fan_in)) normals
// first; on the reference multi-task runs Glorot lands measurably better
// families, so it is the default.
inline MlpModel make_mlp(const std::vector<std::size_t>& layer_dims, Activation hidden,
                         SplitMix64& rng) {
  require_shape(layer_dims.size() >= 2, "make_mlp: need at least one layer");
  MlpModel m;
  m.layer_dims = layer_dims;
  m.hidden_activation = hidden;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    Matrix2D w(layer_dims[i + 1], layer_dims[i]);
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer_dims[i] + layer_dims[i + 1]));
    for (double& v : w.data) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(layer_dims[i + 1], 0.0);
  }
  return m;
}

// Per-layer pre-activations and activations for one batch.
// activations[0] is the input batch; activations[L] the network output.
struct ForwardCache {
  std::vector<Matrix2D> activations;
  std::vector<Matrix2D> pre_activations;
};

inline Matrix2D forward(const MlpModel& model, const Matrix2D& batch,
                        ForwardCache* cache = nullptr) {
  require_shape(batch.cols == model.input_dim(),
                "forward: layer 0 expects width " + std::to_string(model.input_dim()) +
                    ", got batch " + shape_str(batch));
  if (cache) {
    cache->activations.clear();
    cache->pre_activations.clear();
    cache->activations.push_back(batch);
  }
  Matrix2D act = batch;
  const std::size_t last = model.n_layers() - 1;
  for (std::size_t i = 0; i < model.n_layers(); ++i) {
    require_shape(model.weights[i].cols == act.cols,
                  "forward: layer " + std::to_string(i) + " expects width " +
                      std::to_string(model.weights[i].cols) + ", got " + shape_str(act));
    Matrix2D z = matmul(act, model.weights[i], false, true);
    add_row_vector(z, model.biases[i]);
    if (cache) cache->pre_activations.push_back(z);
    if (i != last && model.hidden_activation == Activation::Selu)
      for (double& v : z.data) v = selu(v);
    if (cache) cache->activations.push_back(z);
    act = std::move(z);
  }
  return act;
}

struct Gradients {
  std::vector<Matrix2D> weights;
  std::vector<std::vector<double>> biases;
  Matrix2D inputs;  // d loss / d batch — how gradients reach embedding vectors
};

// Exact reverse-mode gradients for the scalar loss whose output-gradient is
// supplied. Returns gradients for all weights, biases, and the batch inputs.
inline Gradients backward(const MlpModel& model, const ForwardCache& cache,
                          const Matrix2D& output_grad) {
  const std::size_t layers = model.n_layers();
  require_shape(cache.activations.size() == layers + 1 && cache.pre_activations.size() == layers,
                "backward: cache does not match model");
  require_shape(output_grad.same_shape(cache.activations.back()),
                "backward: output_grad " + shape_str(output_grad) + " vs outputs " +
                    shape_str(cache.activations.back()));
  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Matrix2D d = output_grad;  // grad w.r.t. activations of the current layer output
  for (std::size_t ir = layers; ir-- > 0;) {
    if (ir != layers - 1 && model.hidden_activation == Activation::Selu) {
      const Matrix2D& z = cache.pre_activations[ir];
      for (std::size_t k = 0; k < d.size(); ++k) d.data[k] *= selu_grad(z.data[k]);
    }
    g.weights[ir] = matmul(d, cache.activations[ir], true, false);
    g.biases[ir] = col_sums(d);
    d = matmul(d, model.weights[ir], false, false);
  }
  g.inputs = std::move(d);
  return g;
}

struct MseResult {
  double loss;
  Matrix2D grad;  // d loss / d pred
};

// Mean over all entries of the squared difference.
inline MseResult mse_loss(const Matrix2D& pred, const Matrix2D& target) {
  require_shape(pred.same_shape(target),
                "mse_loss: pred " + shape_str(pred) + " vs target " + shape_str(target));
  MseResult r{0.0, Matrix2D(pred.rows, pred.cols)};
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double diff = pred.data[k] - target.data[k];
    r.loss += diff * diff * inv_n;
    r.grad.data[k] = 2.0 * diff * inv_n;
  }
  return r;
}

// Adam moments for one flat tensor. Moments start at zero; step_count starts
// at 0 and increments once per step.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

inline void adam_step(std::span<double> values, std::span<const double> grads, AdamState& state,
                      double rate) {
  require_shape(values.size() == grads.size() && values.size() == state.first_moment.size(),
                "adam_step: size mismatch");
  ++state.step_count;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t k = 0; k < values.size(); ++k) {
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[k];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[k] * grads[k];
    values[k] -= rate * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
  }
}

// rate(epoch) = initial_rate * decay_factor^floor(epoch/decay_every).
struct LrSchedule {
  double initial_rate = 0.01;
  double decay_factor = 0.995;   // in (0, 1]
  std::size_t decay_every = 10;  // epochs

  double rate(std::size_t epoch) const {
    return initial_rate *
           std::pow(decay_factor, static_cast<double>(epoch / (decay_every ? decay_every : 1)));
  }
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  std::string worst;  // coordinate where the max occurred
};

// Central-difference check of backward() over every weight, bias, and input
// entry, against the analytic gradient of the MSE loss. Relative error uses
// |a-n| / max(1, |a|, |n|), so near-zero gradients are compared absolutely.
inline GradCheckReport grad_check(const MlpModel& model, const Matrix2D& batch,
                                  const Matrix2D& target, double h, double tol) {
  require_shape(h > 0.0, "grad_check: h must be positive");
  ForwardCache cache;
  const Matrix2D out = forward(model, batch, &cache);
  const MseResult mse = mse_loss(out, target);
  const Gradients analytic = backward(model, cache, mse.grad);

  GradCheckReport report;
  auto record = [&](double a, double n, const std::string& where) {
    const double rel = std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst = where;
    }
  };
  auto loss_with = [&](const MlpModel& m, const Matrix2D& b) {
    return mse_loss(forward(m, b), target).loss;
  };

  MlpModel probe = model;
  for (std::size_t i = 0; i < probe.n_layers(); ++i) {
    for (std::size_t k = 0; k < probe.weights[i].size(); ++k) {
      double& v = probe.weights[i].data[k];
      const double orig = v;
      v = orig + h;
      const double up = loss_with(probe, batch);
      v = orig - h;
      const double dn = loss_with(probe, batch);
      v = orig;
      record(analytic.weights[i].data[k], (up - dn) / (2.0 * h),
             "weight[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
    for (std::size_t k = 0; k < probe.biases[i].size(); ++k) {
      double& v = probe.biases[i][k];
      const double orig = v;
      v = orig + h;
      const double up = loss_with(probe, batch);
      v = orig - h;
      const double dn = loss_with(probe, batch);
      v = orig;
      record(analytic.biases[i][k], (up - dn) / (2.0 * h),
             "bias[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
  }
  Matrix2D probe_batch = batch;
  for (std::size_t k = 0; k < probe_batch.size(); ++k) {
    double& v = probe_batch.data[k];
    const double orig = v;
    v = orig + h;
    const double up = loss_with(model, probe_batch);
    v = orig - h;
    const double dn = loss_with(model, probe_batch);
    v = orig;
    record(analytic.inputs.data[k], (up - dn) / (2.0 * h), "input[" + std::to_string(k) + "]");
  }
  report.pass = report.max_rel_error < tol;
  return report;
}

}  // namespace pnn
