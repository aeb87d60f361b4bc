#pragma once

#include <cblas.h>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "pnn/errors.hpp"

namespace pnn {

// Dense row-major matrix of 64-bit floats. The universal numeric carrier:
// batches of inputs/targets, weight tensors, parameter tables.
struct Matrix2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, length rows*cols

  Matrix2D() = default;
  Matrix2D(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix2D from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Matrix2D m;
    m.rows = rs.size();
    m.cols = rs.size() ? rs.begin()->size() : 0;
    m.data.reserve(m.rows * m.cols);
    for (const auto& r : rs) {
      if (r.size() != m.cols) throw ShapeError("from_rows: ragged row lengths");
      m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix2D& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

inline bool all_finite(const Matrix2D& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline std::string shape_str(const Matrix2D& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

// C = op(A) * op(B). Inner dimensions are checked before dispatching to BLAS.
inline Matrix2D matmul(const Matrix2D& a, const Matrix2D& b, bool trans_a = false,
                       bool trans_b = false) {
  const std::size_t m = trans_a ? a.cols : a.rows;
  const std::size_t k = trans_a ? a.rows : a.cols;
  const std::size_t kb = trans_b ? b.cols : b.rows;
  const std::size_t n = trans_b ? b.rows : b.cols;
  require_shape(k == kb, "matmul: inner dimensions " + shape_str(a) + (trans_a ? "^T" : "") +
                             " * " + shape_str(b) + (trans_b ? "^T" : "") + " do not match");
  Matrix2D c(m, n);
  if (m == 0 || n == 0 || k == 0) return c;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), 1.0, a.data.data(), static_cast<int>(a.cols), b.data.data(),
              static_cast<int>(b.cols), 0.0, c.data.data(), static_cast<int>(c.cols));
  return c;
}

inline void add_row_vector(Matrix2D& m, const std::vector<double>& v) {
  require_shape(v.size() == m.cols, "add_row_vector: vector length " +
                                        std::to_string(v.size()) + " vs " + shape_str(m));
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* p = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols; ++c) p[c] += v[c];
  }
}

inline std::vector<double> col_sums(const Matrix2D& m) {
  std::vector<double> s(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* p = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols; ++c) s[c] += p[c];
  }
  return s;
}

inline double squared_norm(const Matrix2D& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return s;
}

}  // namespace pnn
