#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pnn/pnn.hpp"

namespace pnn {

// Quadratic polynomial c0 + c1*x + c2*x^2; without an intercept c0 stays 0.
struct PolyFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool with_intercept = true;

  double value(double x) const { return c0 + c1 * x + c2 * x * x; }

  Matrix2D predict(const Matrix2D& x) const {
    Matrix2D y(x.rows, 1);
    for (std::size_t r = 0; r < x.rows; ++r) y(r, 0) = value(x(r, 0));
    return y;
  }
};

namespace detail {

// Dense symmetric solve with partial pivoting; plenty for a 3x3 system.
template <std::size_t N>
std::array<double, N> solve_normal_equations(std::array<std::array<double, N>, N> g,
                                             std::array<double, N> rhs) {
  double scale = 0.0;
  for (const auto& row : g)
    for (double v : row) scale = std::max(scale, std::abs(v));
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(g[r][col]) > std::abs(g[pivot][col])) pivot = r;
    if (std::abs(g[pivot][col]) <= 1e-12 * std::max(scale, 1.0))
      throw SingularFitError("polyfit_quadratic: rank-deficient design matrix");
    std::swap(g[col], g[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = g[r][col] / g[col][col];
      for (std::size_t c = col; c < N; ++c) g[r][c] -= f * g[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::array<double, N> x{};
  for (std::size_t col = N; col-- > 0;) {
    double s = rhs[col];
    for (std::size_t c = col + 1; c < N; ++c) s -= g[col][c] * x[c];
    x[col] = s / g[col][col];
  }
  return x;
}

}  // namespace detail

// Exact least squares via the normal equations of the [1, x, x^2] design
// (or [x, x^2] when the constant term is pinned to zero).
inline PolyFit polyfit_quadratic(const Matrix2D& x, const Matrix2D& y, bool with_intercept) {
  require_shape(x.cols == 1 && y.cols == 1 && x.rows == y.rows,
                "polyfit_quadratic: expects column vectors of equal length");
  const std::size_t m = x.rows;
  if (m < (with_intercept ? 3u : 2u))
    throw SingularFitError("polyfit_quadratic: not enough points for the design");

  PolyFit fit;
  fit.with_intercept = with_intercept;
  if (with_intercept) {
    std::array<std::array<double, 3>, 3> g{};
    std::array<double, 3> rhs{};
    for (std::size_t i = 0; i < m; ++i) {
      const std::array<double, 3> row = {1.0, x(i, 0), x(i, 0) * x(i, 0)};
      for (std::size_t a = 0; a < 3; ++a) {
        rhs[a] += row[a] * y(i, 0);
        for (std::size_t b = 0; b < 3; ++b) g[a][b] += row[a] * row[b];
      }
    }
    const auto c = detail::solve_normal_equations<3>(g, rhs);
    fit.c0 = c[0];
    fit.c1 = c[1];
    fit.c2 = c[2];
  } else {
    std::array<std::array<double, 2>, 2> g{};
    std::array<double, 2> rhs{};
    for (std::size_t i = 0; i < m; ++i) {
      const std::array<double, 2> row = {x(i, 0), x(i, 0) * x(i, 0)};
      for (std::size_t a = 0; a < 2; ++a) {
        rhs[a] += row[a] * y(i, 0);
        for (std::size_t b = 0; b < 2; ++b) g[a][b] += row[a] * row[b];
      }
    }
    const auto c = detail::solve_normal_equations<2>(g, rhs);
    fit.c1 = c[0];
    fit.c2 = c[1];
  }
  return fit;
}

inline PolyFit polyfit_quadratic(const TaskSample& task, bool with_intercept) {
  return polyfit_quadratic(task.x, task.y, with_intercept);
}

// Trains the same architecture on one task's points, without any embedding.
// Exactly the param_dim = 0 degeneration of joint training, so a singleton
// joint run and a single-task fit coincide bit for bit.
inline MlpModel fit_single_task(const TaskSample& task, const std::vector<std::size_t>& hidden_dims,
                                const TrainConfig& cfg) {
  if (task.x.rows == 0) throw std::invalid_argument("fit_single_task: empty task");
  TaskSet singleton;
  singleton.family = task.truth.family;
  singleton.k1 = task.x.cols;
  singleton.k2 = task.y.cols;
  singleton.tasks.push_back(task);
  return train_joint(singleton, hidden_dims, 0, cfg).model.base;
}

}  // namespace pnn
