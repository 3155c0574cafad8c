// Shared helpers for the test binaries: finite-difference gradient
// checking and small builders.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "harnn.hpp"

namespace testsup {

/// Forward-only chunk loss from a copy of the given state; the reference
/// quantity for finite differences.
inline double chunk_loss(const harnn::NetworkParams& params, harnn::NetworkState state,
                         std::span<const harnn::Vector> inputs, int target,
                         const harnn::DropoutMasks* masks) {
  const harnn::Vector d =
      harnn::one_hot(params.output.W.rows, static_cast<std::size_t>(target));
  double loss = 0.0;
  for (const harnn::Vector& x : inputs)
    loss += harnn::cross_entropy(harnn::forward_step(params, state, x, masks, nullptr), d);
  return loss;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_abs_err = 0.0;   // |analytic - fd| at the worst parameter
  double worst_rel_err = 0.0;
};

/// Compare every parameter's BPTT gradient against central differences.
/// A parameter passes when |g - fd| <= max(rel_tol * max(|g|, |fd|),
/// abs_floor).
inline GradCheck gradcheck(harnn::NetworkParams& params, const harnn::NetworkState& state0,
                           std::span<const harnn::Vector> inputs, int target,
                           const harnn::DropoutMasks* masks, double step = 1e-5,
                           double rel_tol = 1e-4, double abs_floor = 1e-7) {
  harnn::Gradients analytic = harnn::zero_like(params);
  harnn::NetworkState st = state0;
  harnn::bptt_chunk(params, st, inputs, target, masks, analytic);

  auto pspans = harnn::tensor_spans(params);
  auto gspans = harnn::tensor_spans(analytic);
  GradCheck res;
  for (std::size_t i = 0; i < pspans.size(); ++i) {
    for (std::size_t j = 0; j < pspans[i].size(); ++j) {
      double& w = pspans[i][j];
      const double keep = w;
      w = keep + step;
      const double lp = chunk_loss(params, state0, inputs, target, masks);
      w = keep - step;
      const double lm = chunk_loss(params, state0, inputs, target, masks);
      w = keep;
      const double fd = (lp - lm) / (2.0 * step);
      const double g = gspans[i][j];
      const double err = std::abs(g - fd);
      const double bound = std::max(rel_tol * std::max(std::abs(g), std::abs(fd)), abs_floor);
      ++res.checked;
      if (err > bound) ++res.failures;
      const double rel = err / std::max(std::max(std::abs(g), std::abs(fd)), abs_floor);
      if (rel > res.worst_rel_err) {
        res.worst_rel_err = rel;
        res.worst_abs_err = err;
      }
    }
  }
  return res;
}

inline harnn::NetworkParams make_net(std::uint64_t seed, std::size_t layers, std::size_t units,
                                     std::size_t classes, std::size_t input_dim = 3) {
  harnn::NetworkConfig cfg;
  cfg.input_dim = input_dim;
  cfg.internal_layers = layers;
  cfg.units = units;
  cfg.classes = classes;
  harnn::Rng rng(seed);
  return harnn::init_network(cfg, rng);
}

inline std::vector<harnn::Vector> random_inputs(harnn::Rng& rng, std::size_t n,
                                                std::size_t dim = 3, double lo = -1.0,
                                                double hi = 1.0) {
  std::vector<harnn::Vector> xs(n, harnn::Vector(dim));
  for (auto& x : xs)
    for (double& v : x) v = rng.uniform(lo, hi);
  return xs;
}

inline harnn::NetworkState random_state(const harnn::NetworkParams& params, harnn::Rng& rng,
                                        double scale = 0.5) {
  harnn::NetworkState st = harnn::reset_state(params);
  for (auto& h : st.h)
    for (double& v : h) v = rng.uniform(-scale, scale);
  for (auto& c : st.c)
    for (double& v : c) v = rng.uniform(-scale, scale);
  return st;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("harnn_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsup
