#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pnn/nn.hpp"
#include "pnn/taskgen.hpp"

namespace pnn {

// Row i is the embedding vector p_i of task i.
struct ParamTable {
  std::size_t n_tasks = 0;
  std::size_t param_dim = 0;
  Matrix2D values;  // n_tasks x param_dim

  std::vector<double> mean() const {
    std::vector<double> m(param_dim, 0.0);
    if (n_tasks == 0) return m;
    for (std::size_t t = 0; t < n_tasks; ++t)
      for (std::size_t j = 0; j < param_dim; ++j) m[j] += values(t, j);
    for (double& v : m) v /= static_cast<double>(n_tasks);
    return m;
  }

  std::vector<double> row(std::size_t t) const {
    return {values.row_ptr(t), values.row_ptr(t) + param_dim};
  }

  std::pair<double, double> coord_range(std::size_t j) const {
    double lo = values(0, j), hi = values(0, j);
    for (std::size_t t = 1; t < n_tasks; ++t) {
      lo = std::min(lo, values(t, j));
      hi = std::max(hi, values(t, j));
    }
    return {lo, hi};
  }
};

// Shared network over concat(x, p): base.layer_dims[0] == k1 + param_dim.
struct PnnModel {
  MlpModel base;
  ParamTable params;
  std::size_t k1 = 0;
  std::size_t param_dim = 0;
};

struct TrainConfig {
  std::size_t epochs = 8000;
  std::size_t batch_size = 0;  // 0 = full batch
  LrSchedule schedule{};       // 0.01, x0.995 every 10 epochs
  std::uint64_t seed = 0;
  double input_noise_sigma = 0.0;     // Gaussian noise on the x columns only
  double embedding_init_sigma = 0.1;  // N(0, sigma^2) embedding start
};

enum class RecalibInit { MeanOfTrained, LastTask, Zero, Given };

// Defaults reproduce the reference protocol: 100 epochs of Adam, batch 10,
// constant rate 0.01, started from the mean of the trained embeddings.
struct RecalibConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 10;
  double rate = 0.01;
  RecalibInit init = RecalibInit::MeanOfTrained;
  std::vector<double> given;  // used when init == Given
  std::uint64_t seed = 0;
};

// Per-batch view handed to an optional training observer. `inputs` is the
// assembled [x | p] batch actually fed to the base network.
struct TrainStep {
  std::size_t epoch;
  std::size_t batch_index;
  double rate;
  double batch_loss;
  const Matrix2D* inputs;
  const std::vector<std::size_t>* row_task_ids;
  const ParamTable* params;
};
using TrainObserver = std::function<void(const TrainStep&)>;

struct PnnTrainResult {
  PnnModel model;
  std::vector<double> epoch_losses;  // pooled training loss per epoch
};

inline Matrix2D concat_inputs(const Matrix2D& x, std::span<const double> p) {
  Matrix2D in(x.rows, x.cols + p.size());
  for (std::size_t r = 0; r < x.rows; ++r) {
    double* dst = in.row_ptr(r);
    const double* src = x.row_ptr(r);
    std::copy(src, src + x.cols, dst);
    std::copy(p.begin(), p.end(), dst + x.cols);
  }
  return in;
}

// Evaluates the family member g(.; p): forward pass on [x | p broadcast].
inline Matrix2D predict(const PnnModel& model, const Matrix2D& x, std::span<const double> p) {
  require_shape(x.cols == model.k1, "predict: x " + shape_str(x) + " vs k1 " +
                                        std::to_string(model.k1));
  require_shape(p.size() == model.param_dim, "predict: parameter length " +
                                                 std::to_string(p.size()) + " vs " +
                                                 std::to_string(model.param_dim));
  return forward(model.base, concat_inputs(x, p));
}

namespace detail {

struct MlpAdam {
  std::vector<AdamState> weights;
  std::vector<AdamState> biases;

  explicit MlpAdam(const MlpModel& m) {
    for (const auto& w : m.weights) weights.emplace_back(w.size());
    for (const auto& b : m.biases) biases.emplace_back(b.size());
  }

  void step(MlpModel& m, const Gradients& g, double rate) {
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      adam_step(m.weights[i].data, g.weights[i].data, weights[i], rate);
      adam_step(m.biases[i], g.biases[i], biases[i], rate);
    }
  }
};

inline void check_divergence(double loss, double initial_loss, std::size_t epoch) {
  if (!std::isfinite(loss) || loss > 1e6 * std::max(initial_loss, 1e-300))
    throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                              std::to_string(loss) + ")",
                          epoch);
}

}  // namespace detail

// Joint minimization of the multi-task loss over the shared weights and all
// task embeddings. A batch is drawn over (task, sample) pairs pooled across
// tasks; shared weights update every step, embeddings only for the tasks
// present in the batch (per-row Adam moments, TF-style lazy sparse update).
// Embedding gradients arrive through backward()'s input gradient.
//
// Deterministic given the seed; streams: 0 = weight init, 1 = embedding
// init (N(0, 0.1^2)), 2 = shuffling and input noise.
inline PnnTrainResult train_joint(const TaskSet& tasks,
                                  const std::vector<std::size_t>& hidden_dims,
                                  std::size_t param_dim, const TrainConfig& cfg,
                                  const TrainObserver& observer = {}) {
  if (tasks.tasks.empty()) throw std::invalid_argument("train_joint: empty task set");
  if (cfg.epochs < 1) throw std::invalid_argument("train_joint: epochs must be >= 1");
  for (const TaskSample& t : tasks.tasks)
    require_shape(t.x.cols == tasks.k1 && t.y.cols == tasks.k2 && t.x.rows == t.y.rows,
                  "train_joint: inconsistent task dimensions");

  std::vector<std::size_t> dims;
  dims.push_back(tasks.k1 + param_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(tasks.k2);

  PnnModel model;
  model.k1 = tasks.k1;
  model.param_dim = param_dim;
  {
    SplitMix64 init_rng = substream(cfg.seed, 0);
    model.base = make_mlp(dims, Activation::Selu, init_rng);
  }
  model.params.n_tasks = tasks.tasks.size();
  model.params.param_dim = param_dim;
  model.params.values = Matrix2D(model.params.n_tasks, param_dim);
  {
    SplitMix64 emb_rng = substream(cfg.seed, 1);
    for (double& v : model.params.values.data) v = cfg.embedding_init_sigma * emb_rng.normal();
  }

  std::vector<std::pair<std::size_t, std::size_t>> pool;  // (task, sample row)
  for (std::size_t t = 0; t < tasks.tasks.size(); ++t)
    for (std::size_t r = 0; r < tasks.tasks[t].x.rows; ++r) pool.emplace_back(t, r);

  detail::MlpAdam opt(model.base);
  std::vector<AdamState> embedding_opt(model.params.n_tasks, AdamState(param_dim));
  SplitMix64 loop_rng = substream(cfg.seed, 2);

  const std::size_t batch_rows = cfg.batch_size == 0 ? pool.size() : cfg.batch_size;
  std::vector<double> epoch_losses;
  epoch_losses.reserve(cfg.epochs);
  double initial_loss = -1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double rate = cfg.schedule.rate(epoch);
    shuffle(pool, loop_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < pool.size(); start += batch_rows, ++batch_index) {
      const std::size_t b = std::min(batch_rows, pool.size() - start);
      Matrix2D inputs(b, tasks.k1 + param_dim);
      Matrix2D targets(b, tasks.k2);
      std::vector<std::size_t> row_tasks(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto [t, r] = pool[start + i];
        row_tasks[i] = t;
        const TaskSample& task = tasks.tasks[t];
        double* dst = inputs.row_ptr(i);
        std::copy(task.x.row_ptr(r), task.x.row_ptr(r) + tasks.k1, dst);
        std::copy(model.params.values.row_ptr(t), model.params.values.row_ptr(t) + param_dim,
                  dst + tasks.k1);
        std::copy(task.y.row_ptr(r), task.y.row_ptr(r) + tasks.k2, targets.row_ptr(i));
      }
      if (cfg.input_noise_sigma > 0.0)
        for (std::size_t i = 0; i < b; ++i) {
          double* dst = inputs.row_ptr(i);
          for (std::size_t c = 0; c < tasks.k1; ++c)
            dst[c] += cfg.input_noise_sigma * loop_rng.normal();
        }

      ForwardCache cache;
      const Matrix2D out = forward(model.base, inputs, &cache);
      const MseResult mse = mse_loss(out, targets);
      if (initial_loss < 0.0) initial_loss = mse.loss;
      detail::check_divergence(mse.loss, initial_loss, epoch);
      if (observer)
        observer(TrainStep{epoch, batch_index, rate, mse.loss, &inputs, &row_tasks,
                           &model.params});
      loss_sum += mse.loss * static_cast<double>(b);

      const Gradients grads = backward(model.base, cache, mse.grad);
      opt.step(model.base, grads, rate);

      if (param_dim > 0) {
        // Accumulate the p-block of the input gradient per task present.
        std::map<std::size_t, std::vector<double>> task_grads;
        for (std::size_t i = 0; i < b; ++i) {
          auto it = task_grads.try_emplace(row_tasks[i], std::vector<double>(param_dim, 0.0)).first;
          const double* gp = grads.inputs.row_ptr(i) + tasks.k1;
          for (std::size_t j = 0; j < param_dim; ++j) it->second[j] += gp[j];
        }
        for (auto& [t, g] : task_grads) {
          std::span<double> p_row(model.params.values.row_ptr(t), param_dim);
          adam_step(p_row, g, embedding_opt[t], rate);
        }
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(pool.size());
    detail::check_divergence(epoch_loss, initial_loss, epoch);
    epoch_losses.push_back(epoch_loss);
  }
  return PnnTrainResult{std::move(model), std::move(epoch_losses)};
}

struct RecalibResult {
  std::vector<double> p_hat;
  // loss_history[0] is the full-data loss before any step; entry e the loss
  // after epoch e.
  std::vector<double> loss_history;
};

// Fits only a fresh parameter vector to one task's samples; the base network
// is read, never written. Safe to run many recalibrations concurrently
// against one trained model.
inline RecalibResult recalibrate(const PnnModel& model, const TaskSample& data,
                                 const RecalibConfig& cfg) {
  if (data.x.rows == 0) throw std::invalid_argument("recalibrate: empty data");
  require_shape(data.x.cols == model.k1 && data.y.rows == data.x.rows,
                "recalibrate: data dims do not match model");

  RecalibResult res;
  switch (cfg.init) {
    case RecalibInit::MeanOfTrained: res.p_hat = model.params.mean(); break;
    case RecalibInit::LastTask:
      res.p_hat = model.params.n_tasks ? model.params.row(model.params.n_tasks - 1)
                                       : std::vector<double>(model.param_dim, 0.0);
      break;
    case RecalibInit::Zero: res.p_hat.assign(model.param_dim, 0.0); break;
    case RecalibInit::Given:
      if (cfg.given.size() != model.param_dim)
        throw std::invalid_argument("recalibrate: given vector has wrong length");
      res.p_hat = cfg.given;
      break;
  }

  auto full_loss = [&] {
    return mse_loss(predict(model, data.x, res.p_hat), data.y).loss;
  };
  res.loss_history.reserve(cfg.epochs + 1);
  res.loss_history.push_back(full_loss());

  AdamState opt(model.param_dim);
  SplitMix64 rng = substream(cfg.seed, 0);
  std::vector<std::size_t> order(data.x.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch_rows = cfg.batch_size == 0 ? order.size() : cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch_rows) {
      const std::size_t b = std::min(batch_rows, order.size() - start);
      Matrix2D xb(b, model.k1), yb(b, data.y.cols);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t r = order[start + i];
        std::copy(data.x.row_ptr(r), data.x.row_ptr(r) + model.k1, xb.row_ptr(i));
        std::copy(data.y.row_ptr(r), data.y.row_ptr(r) + data.y.cols, yb.row_ptr(i));
      }
      Matrix2D inputs = concat_inputs(xb, res.p_hat);
      ForwardCache cache;
      const Matrix2D out = forward(model.base, inputs, &cache);
      const MseResult mse = mse_loss(out, yb);
      detail::check_divergence(mse.loss, std::max(res.loss_history.front(), 1.0), epoch);
      const Gradients grads = backward(model.base, cache, mse.grad);
      std::vector<double> g(model.param_dim, 0.0);
      for (std::size_t i = 0; i < b; ++i) {
        const double* gp = grads.inputs.row_ptr(i) + model.k1;
        for (std::size_t j = 0; j < model.param_dim; ++j) g[j] += gp[j];
      }
      adam_step(res.p_hat, g, opt, cfg.rate);
    }
    res.loss_history.push_back(full_loss());
  }
  return res;
}

using Box = std::vector<std::pair<double, double>>;  // per-coordinate (lo, hi)

// Empirical lower bound on the Lipschitz constant of p -> g(x; p): max over
// sampled (x, p1, p2) of ||g(x;p1)-g(x;p2)|| / ||p1-p2||. Sample i depends
// only on (seed, i), so enlarging n_samples refines a nested sample set.
inline double lipschitz_estimate(const PnnModel& model, const Box& x_box, const Box& p_box,
                                 std::size_t n_samples, std::uint64_t seed) {
  require_shape(x_box.size() == model.k1 && p_box.size() == model.param_dim,
                "lipschitz_estimate: box dims do not match model");
  for (const auto& [lo, hi] : x_box)
    if (!(lo < hi)) throw std::invalid_argument("lipschitz_estimate: degenerate x box");
  for (const auto& [lo, hi] : p_box)
    if (!(lo < hi)) throw std::invalid_argument("lipschitz_estimate: degenerate p box");

  double best = 0.0;
  Matrix2D x(1, model.k1);
  std::vector<double> p1(model.param_dim), p2(model.param_dim);
  for (std::size_t i = 0; i < n_samples; ++i) {
    SplitMix64 rng = substream(seed, i);
    for (std::size_t c = 0; c < model.k1; ++c) x(0, c) = rng.uniform(x_box[c].first, x_box[c].second);
    for (std::size_t j = 0; j < model.param_dim; ++j)
      p1[j] = rng.uniform(p_box[j].first, p_box[j].second);
    for (std::size_t j = 0; j < model.param_dim; ++j)
      p2[j] = rng.uniform(p_box[j].first, p_box[j].second);
    double dp = 0.0;
    for (std::size_t j = 0; j < model.param_dim; ++j) {
      const double d = p1[j] - p2[j];
      dp += d * d;
    }
    if (dp == 0.0) continue;
    const Matrix2D y1 = predict(model, x, p1);
    const Matrix2D y2 = predict(model, x, p2);
    double dy = 0.0;
    for (std::size_t k = 0; k < y1.size(); ++k) {
      const double d = y1.data[k] - y2.data[k];
      dy += d * d;
    }
    best = std::max(best, std::sqrt(dy / dp));
  }
  return best;
}

struct ProjectionSweep {
  std::size_t coord = 0;
  std::vector<double> param_values;  // swept values of p[coord]
  std::vector<Matrix2D> curves;      // one prediction matrix per swept value
};

// Varies p[coord] over n_steps equidistant values between the trained
// minimum and maximum of that coordinate, all other coordinates fixed at
// base_p.
inline ProjectionSweep projection_sweep(const PnnModel& model, std::span<const double> base_p,
                                        std::size_t coord, std::size_t n_steps,
                                        const Matrix2D& x_grid) {
  require_shape(coord < model.param_dim, "projection_sweep: coord out of range");
  require_shape(base_p.size() == model.param_dim, "projection_sweep: base_p length");
  const auto [lo, hi] = model.params.coord_range(coord);
  ProjectionSweep sweep;
  sweep.coord = coord;
  std::vector<double> p(base_p.begin(), base_p.end());
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double v =
        n_steps > 1 ? lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(n_steps - 1)
                    : lo;
    p[coord] = v;
    sweep.param_values.push_back(v);
    sweep.curves.push_back(predict(model, x_grid, p));
  }
  return sweep;
}

// Read-only export of the trained embeddings for reporting.
inline ParamTable param_scatter(const PnnModel& model) { return model.params; }

}  // namespace pnn
