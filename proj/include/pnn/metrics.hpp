#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pnn/pnn.hpp"
#include "pnn/taskgen.hpp"

namespace pnn {

// e_i = sqrt(sum_j ||y_j - pred_j||^2) / m, with the residuals taken on the
// evaluation grid against the noiseless truth and m the task's sample count.
// The formula is literal: the square root of the sum, divided by m.
inline double task_error_from_targets(const Matrix2D& y_true, const Matrix2D& preds,
                                      std::size_t m) {
  require_shape(y_true.same_shape(preds), "task_error: prediction shape " + shape_str(preds) +
                                              " vs targets " + shape_str(y_true));
  if (m == 0) throw std::invalid_argument("task_error: m must be positive");
  double ss = 0.0;
  for (std::size_t k = 0; k < y_true.size(); ++k) {
    const double r = y_true.data[k] - preds.data[k];
    ss += r * r;
  }
  return std::sqrt(ss) / static_cast<double>(m);
}

inline double task_error(const GroundTruth& truth, const Matrix2D& grid_x, const Matrix2D& preds,
                         std::size_t m) {
  return task_error_from_targets(truth.evaluate(grid_x), preds, m);
}

// e = sqrt(sum_i e_i^2) / N.
inline double aggregate_error(const std::vector<double>& task_errors) {
  if (task_errors.empty()) throw std::invalid_argument("aggregate_error: empty list");
  double ss = 0.0;
  for (double e : task_errors) ss += e * e;
  return std::sqrt(ss) / static_cast<double>(task_errors.size());
}

inline double mean_error(const std::vector<double>& task_errors) {
  if (task_errors.empty()) throw std::invalid_argument("mean_error: empty list");
  return std::accumulate(task_errors.begin(), task_errors.end(), 0.0) /
         static_cast<double>(task_errors.size());
}

// d_nu(x, y) = |x - y| / (nu + x + y), a bounded metric on the non-negative
// reals; values lie in [0, 1). The denominator groups (x + y) so symmetry is
// exact in floating point, not just up to rounding.
inline double d_nu(double x, double y, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("d_nu: nu must be positive");
  if (x < 0.0 || y < 0.0) throw std::invalid_argument("d_nu: arguments must be non-negative");
  return std::abs(x - y) / (nu + (x + y));
}

// Per-task errors with everything needed to reproduce the row.
struct ErrorReport {
  std::string model;  // "pnn", "single_network", "polyfit", "polyfit_zero"
  std::string family;
  std::size_t n_train_tasks = 0;
  std::size_t m_points = 0;
  std::size_t param_dim = 0;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::vector<double> task_errors;

  double aggregate() const { return aggregate_error(task_errors); }
  double mean() const { return mean_error(task_errors); }
};

struct LossGap {
  double empirical;  // training-sample average loss
  double grid;       // dense-grid average loss against the noiseless truth
  double gap;        // d_nu(empirical, grid)
};

// The overfitting diagnostic: empirical loss on the training points versus
// the loss on a dense grid against the generator, with their d_nu distance.
// The squared-error loss matches mse_loss, so the two are comparable.
template <typename Predict>
LossGap loss_gap(Predict&& predict_fn, const TaskSample& train, const Matrix2D& grid,
                 double nu = 1.0) {
  const Matrix2D train_pred = predict_fn(train.x);
  const Matrix2D grid_pred = predict_fn(grid);
  const Matrix2D grid_true = train.truth.evaluate(grid);
  LossGap g{};
  g.empirical = mse_loss(train_pred, train.y).loss;
  g.grid = mse_loss(grid_pred, grid_true).loss;
  g.gap = d_nu(g.empirical, g.grid, nu);
  return g;
}

inline LossGap loss_gap(const PnnModel& model, std::span<const double> p, const TaskSample& train,
                        const Matrix2D& grid, double nu = 1.0) {
  return loss_gap([&](const Matrix2D& x) { return predict(model, x, p); }, train, grid, nu);
}

struct ClusterResult {
  double accuracy = 0.0;          // best label-permutation match rate
  double centroid_distance = 0.0;
  std::vector<int> assignment;    // cluster index per task row
};

namespace detail {

inline double row_sq_dist(const Matrix2D& m, std::size_t r, const std::vector<double>& c) {
  double s = 0.0;
  const double* p = m.row_ptr(r);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double d = p[j] - c[j];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// 2-means with seeded restarts on the embedding rows, scored against the true
// task labels. Restart initialization picks rows from a lexicographically
// sorted order, so the result does not depend on task ordering.
inline ClusterResult cluster_separation(const ParamTable& params, const std::vector<int>& labels,
                                        std::uint64_t seed = 0, std::size_t restarts = 10) {
  const std::size_t n = params.n_tasks;
  const std::size_t dim = params.param_dim;
  if (labels.size() != n) throw std::invalid_argument("cluster_separation: label count");
  if (n < 2) throw std::invalid_argument("cluster_separation: need at least two rows");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(params.values.row_ptr(a), params.values.row_ptr(a) + dim,
                                        params.values.row_ptr(b), params.values.row_ptr(b) + dim);
  });
  const bool degenerate = std::equal(params.values.row_ptr(order.front()),
                                     params.values.row_ptr(order.front()) + dim,
                                     params.values.row_ptr(order.back()));
  if (degenerate) throw std::invalid_argument("cluster_separation: all rows identical");

  double best_inertia = std::numeric_limits<double>::infinity();
  std::vector<int> best_assign;
  std::vector<std::vector<double>> best_centroids;

  for (std::size_t restart = 0; restart < restarts; ++restart) {
    SplitMix64 rng = substream(seed, restart);
    std::vector<std::vector<double>> centroids(2, std::vector<double>(dim));
    const std::size_t i0 = static_cast<std::size_t>(rng.below(n));
    std::size_t i1 = i0;
    while (std::equal(params.values.row_ptr(order[i0]), params.values.row_ptr(order[i0]) + dim,
                      params.values.row_ptr(order[i1])))
      i1 = static_cast<std::size_t>(rng.below(n));
    for (std::size_t j = 0; j < dim; ++j) {
      centroids[0][j] = params.values(order[i0], j);
      centroids[1][j] = params.values(order[i1], j);
    }

    std::vector<int> assign(n, 0);
    for (std::size_t iter = 0; iter < 500; ++iter) {
      for (std::size_t r = 0; r < n; ++r)
        assign[r] = detail::row_sq_dist(params.values, r, centroids[0]) <=
                            detail::row_sq_dist(params.values, r, centroids[1])
                        ? 0
                        : 1;
      std::vector<std::vector<double>> next(2, std::vector<double>(dim, 0.0));
      std::size_t counts[2] = {0, 0};
      for (std::size_t r = 0; r < n; ++r) {
        ++counts[assign[r]];
        for (std::size_t j = 0; j < dim; ++j) next[assign[r]][j] += params.values(r, j);
      }
      for (int k = 0; k < 2; ++k) {
        if (counts[k] == 0) {
          // Empty cluster: restart it at the row farthest from the other centroid.
          std::size_t far = 0;
          double far_d = -1.0;
          for (std::size_t r = 0; r < n; ++r) {
            const double d = detail::row_sq_dist(params.values, r, centroids[1 - k]);
            if (d > far_d) {
              far_d = d;
              far = r;
            }
          }
          for (std::size_t j = 0; j < dim; ++j) next[k][j] = params.values(far, j);
        } else {
          for (std::size_t j = 0; j < dim; ++j) next[k][j] /= static_cast<double>(counts[k]);
        }
      }
      double shift = 0.0, norm = 0.0;
      for (int k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = next[k][j] - centroids[k][j];
          shift += d * d;
          norm += next[k][j] * next[k][j];
        }
      centroids = std::move(next);
      if (shift <= 1e-20 * std::max(norm, 1e-300)) break;  // relative change < 1e-10
    }

    double inertia = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      inertia += detail::row_sq_dist(params.values, r, centroids[assign[r]]);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
      best_centroids = centroids;
    }
  }

  ClusterResult res;
  res.assignment = std::move(best_assign);
  std::size_t match = 0;
  for (std::size_t r = 0; r < n; ++r)
    if (res.assignment[r] == labels[r]) ++match;
  res.accuracy = std::max(match, n - match) / static_cast<double>(n);
  double d2 = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double d = best_centroids[0][j] - best_centroids[1][j];
    d2 += d * d;
  }
  res.centroid_distance = std::sqrt(d2);
  return res;
}

// Residual histograms split at the maturity threshold; bins are left-closed
// with the given width (default one basis point = 1e-4 in rate units).
struct ErrorHistogram {
  std::map<long, std::size_t> short_bins;  // maturity < split
  std::map<long, std::size_t> long_bins;   // maturity >= split
  double split_at_years = 0.25;
  double bin_width = 1e-4;

  static long bin_of(double residual, double width) {
    return static_cast<long>(std::floor(residual / width));
  }
};

inline ErrorHistogram error_histogram(const std::vector<double>& residuals,
                                      const std::vector<double>& maturities_years,
                                      double split_at_years = 0.25, double bin_width = 1e-4) {
  if (residuals.size() != maturities_years.size())
    throw std::invalid_argument("error_histogram: misaligned inputs");
  if (!(bin_width > 0.0)) throw std::invalid_argument("error_histogram: bin width");
  ErrorHistogram h;
  h.split_at_years = split_at_years;
  h.bin_width = bin_width;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    auto& bins = maturities_years[i] < split_at_years ? h.short_bins : h.long_bins;
    ++bins[ErrorHistogram::bin_of(residuals[i], bin_width)];
  }
  return h;
}

}  // namespace pnn
