// Dense row-major matrix / vector primitives used by the whole engine.
//
// Everything runs in 64-bit floating point. Matrices are stored row-major
// in a single contiguous buffer; vectors are plain std::vector<double>.
// Operations throw std::invalid_argument on shape mismatches.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace harnn {

using Vector = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, values.size() == rows*cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::size_t size() const { return values.size(); }
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

/// out[j] = sum_i m(j,i) * v[i]
inline Vector mat_vec(const Matrix& m, const Vector& v) {
  require(m.cols == v.size(), "mat_vec: matrix has " + std::to_string(m.cols) +
                                  " cols but vector has " + std::to_string(v.size()) +
                                  " entries");
  Vector out(m.rows, 0.0);
  const double* p = m.values.data();
  for (std::size_t j = 0; j < m.rows; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.cols; ++i) acc += p[i] * v[i];
    out[j] = acc;
    p += m.cols;
  }
  return out;
}

/// Transposed product: out[i] = sum_j m(j,i) * v[j]
inline Vector mat_tvec(const Matrix& m, const Vector& v) {
  require(m.rows == v.size(), "mat_tvec: matrix has " + std::to_string(m.rows) +
                                  " rows but vector has " + std::to_string(v.size()) +
                                  " entries");
  Vector out(m.cols, 0.0);
  const double* p = m.values.data();
  for (std::size_t j = 0; j < m.rows; ++j) {
    const double vj = v[j];
    for (std::size_t i = 0; i < m.cols; ++i) out[i] += p[i] * vj;
    p += m.cols;
  }
  return out;
}

/// acc(j,i) += a[j] * b[i]
inline void add_outer(Matrix& acc, const Vector& a, const Vector& b) {
  require(acc.rows == a.size() && acc.cols == b.size(), "add_outer: shape mismatch");
  double* p = acc.values.data();
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double aj = a[j];
    for (std::size_t i = 0; i < b.size(); ++i) p[i] += aj * b[i];
    p += b.size();
  }
}

inline void add_to(Vector& acc, const Vector& v) {
  require(acc.size() == v.size(), "add_to: length mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

inline void scale(std::span<double> xs, double s) {
  for (double& x : xs) x *= s;
}

}  // namespace harnn
