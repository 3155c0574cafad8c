// Activation functions, softmax, cross entropy and norms.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "harnn/matrix.hpp"

namespace harnn {

// Floor applied inside log() so a degenerate probability never produces -inf.
inline constexpr double kLogFloor = 1e-12;

enum class Activation { Tanh, Logistic, Relu };

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

inline Vector apply_activation(Activation kind, const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("apply_activation: non-finite input");
  Vector out(v.size());
  switch (kind) {
    case Activation::Tanh:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
      break;
    case Activation::Logistic:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = logistic(v[i]);
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
      break;
  }
  return out;
}

/// softmax with max subtraction; output sums to 1 and every entry is in (0,1).
inline Vector softmax(const Vector& v) {
  require(!v.empty(), "softmax: empty input");
  Vector out(v.size());
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

/// -sum_h d[h]*log(y[h]), log floored at kLogFloor. d is one-hot.
inline double cross_entropy(const Vector& y, const Vector& d) {
  require(y.size() == d.size(), "cross_entropy: length mismatch");
  double loss = 0.0;
  for (std::size_t h = 0; h < y.size(); ++h) {
    if (d[h] != 0.0) loss -= d[h] * std::log(std::max(y[h], kLogFloor));
  }
  return loss;
}

inline double sum_squares(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x * x;
  return acc;
}

inline double l2_norm(std::span<const double> xs) { return std::sqrt(sum_squares(xs)); }

inline Vector one_hot(std::size_t classes, std::size_t idx) {
  Vector d(classes, 0.0);
  d[idx] = 1.0;
  return d;
}

}  // namespace harnn
