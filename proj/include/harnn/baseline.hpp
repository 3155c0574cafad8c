// Stand-in window classifier for the feature pipeline: multinomial
// softmax regression on the 13 selected features, trained full-batch
// with the same Adam rule as the network. Features are z-scored with
// training statistics that ship inside the model.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "harnn/features.hpp"
#include "harnn/matrix.hpp"
#include "harnn/numeric.hpp"
#include "harnn/training.hpp"

namespace harnn {

struct BaselineConfig {
  std::size_t epochs = 300;  // full-batch updates
  AdamConfig adam{0.05, 0.9, 0.999, 1e-8};
};

struct BaselineModel {
  Matrix W;             // classes x 13
  Vector b;             // classes
  Vector feat_mean;     // z-score statistics from the training set
  Vector feat_std;
  std::size_t classes = 0;
};

namespace detail {
inline Vector standardize(const BaselineModel& model, const SelectedFeatures& x) {
  Vector z(kSelectedCount);
  for (std::size_t i = 0; i < kSelectedCount; ++i)
    z[i] = (x[i] - model.feat_mean[i]) / model.feat_std[i];
  return z;
}
}  // namespace detail

inline Vector baseline_scores(const BaselineModel& model, const SelectedFeatures& x) {
  const Vector z = detail::standardize(model, x);
  Vector v = mat_vec(model.W, z);
  add_to(v, model.b);
  return softmax(v);
}

inline int classify_window(const BaselineModel& model, const SelectedFeatures& x) {
  return static_cast<int>(predict_class(baseline_scores(model, x)));
}

/// Gradient-descent fit from zero-initialized weights; deterministic (no
/// randomness anywhere in the pipeline). Every class must appear in the
/// training labels.
inline BaselineModel train_baseline(std::span<const SelectedFeatures> features,
                                    std::span<const int> labels, std::size_t classes,
                                    const BaselineConfig& cfg = {}) {
  require(features.size() == labels.size(), "train_baseline: feature/label count mismatch");
  require(!features.empty(), "train_baseline: empty training set");
  require(classes >= 2, "train_baseline: need at least two classes");
  std::vector<std::size_t> counts(classes, 0);
  for (int l : labels) {
    require(l >= 0 && static_cast<std::size_t>(l) < classes,
            "train_baseline: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < classes; ++c)
    require(counts[c] > 0,
            "train_baseline: class " + std::to_string(c) + " has no training windows");

  BaselineModel model;
  model.classes = classes;
  model.feat_mean.assign(kSelectedCount, 0.0);
  model.feat_std.assign(kSelectedCount, 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (const auto& f : features)
    for (std::size_t i = 0; i < kSelectedCount; ++i) model.feat_mean[i] += f[i];
  for (double& m : model.feat_mean) m *= inv_n;
  for (const auto& f : features)
    for (std::size_t i = 0; i < kSelectedCount; ++i) {
      const double d = f[i] - model.feat_mean[i];
      model.feat_std[i] += d * d;
    }
  for (double& s : model.feat_std) s = std::max(std::sqrt(s * inv_n), kRatioFloor);

  std::vector<Vector> z(features.size());
  for (std::size_t r = 0; r < features.size(); ++r) z[r] = detail::standardize(model, features[r]);

  model.W = Matrix(classes, kSelectedCount);
  model.b.assign(classes, 0.0);
  Matrix gW(classes, kSelectedCount), mW(classes, kSelectedCount), vW(classes, kSelectedCount);
  Vector gb(classes), mb(classes, 0.0), vb(classes, 0.0);

  for (std::size_t t = 1; t <= cfg.epochs; ++t) {
    std::fill(gW.values.begin(), gW.values.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t r = 0; r < z.size(); ++r) {
      Vector v = mat_vec(model.W, z[r]);
      add_to(v, model.b);
      const Vector y = softmax(v);
      Vector dv(classes);
      for (std::size_t h = 0; h < classes; ++h)
        dv[h] = y[h] - (h == static_cast<std::size_t>(labels[r]) ? 1.0 : 0.0);
      add_outer(gW, dv, z[r]);
      add_to(gb, dv);
    }
    scale(gW.values, inv_n);
    scale(gb, inv_n);
    adam_step_span(model.W.values, gW.values, mW.values, vW.values, t, cfg.adam);
    adam_step_span(model.b, gb, mb, vb, t, cfg.adam);
  }
  return model;
}

inline double baseline_accuracy(const BaselineModel& model,
                                std::span<const SelectedFeatures> features,
                                std::span<const int> labels) {
  require(features.size() == labels.size() && !features.empty(),
          "baseline_accuracy: bad evaluation set");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < features.size(); ++r)
    if (classify_window(model, features[r]) == labels[r]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

}  // namespace harnn
