// Per-sample recognition, recognition rates and confusion matrices.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "harnn/dataset.hpp"
#include "harnn/network.hpp"

namespace harnn {

struct TrialPrediction {
  std::string trial_id;
  std::vector<int> truth;
  std::vector<int> predicted;
};

/// Forward-only pass over a whole trial: state reset at the start, one
/// prediction per sample, no dropout.
inline TrialPrediction recognize_trial(const NetworkParams& params, const Trial& trial) {
  TrialPrediction pred;
  pred.trial_id = trial.id;
  pred.truth.reserve(trial.samples.size());
  pred.predicted.reserve(trial.samples.size());
  NetworkState state = reset_state(params);
  for (std::size_t i = 0; i < trial.samples.size(); ++i) {
    const Vector y = forward_step(params, state, trial.input_at(i));
    pred.predicted.push_back(static_cast<int>(predict_class(y)));
    pred.truth.push_back(trial.label_at(i));
  }
  return pred;
}

/// Recognize every trial of a dataset. Trials are independent, so they may
/// be distributed over threads; results land at fixed indices and are
/// identical to the single-threaded pass.
inline std::vector<TrialPrediction> recognize_dataset(const NetworkParams& params,
                                                      const Dataset& ds,
                                                      std::size_t threads = 1) {
  std::vector<TrialPrediction> preds(ds.trials.size());
  if (threads <= 1 || ds.trials.size() < 2) {
    for (std::size_t i = 0; i < ds.trials.size(); ++i)
      preds[i] = recognize_trial(params, ds.trials[i]);
    return preds;
  }
  std::vector<std::thread> pool;
  std::size_t n = std::min(threads, ds.trials.size());
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < ds.trials.size(); i += n)
        preds[i] = recognize_trial(params, ds.trials[i]);
    });
  }
  for (auto& t : pool) t.join();
  return preds;
}

/// Fraction of correctly classified samples within one trial.
inline double recognition_rate(const TrialPrediction& pred) {
  require(!pred.predicted.empty(), "recognition_rate: empty prediction");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.predicted.size(); ++i)
    if (pred.predicted[i] == pred.truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(pred.predicted.size());
}

/// Unweighted mean of per-trial rates.
inline double dataset_rate(std::span<const TrialPrediction> preds) {
  require(!preds.empty(), "dataset_rate: no predictions");
  double sum = 0.0;
  for (const auto& p : preds) sum += recognition_rate(p);
  return sum / static_cast<double>(preds.size());
}

/// Alternative aggregation: correct samples over all samples. Reported
/// alongside the unweighted mean for transparency; differs when trial
/// lengths differ.
inline double sample_weighted_rate(std::span<const TrialPrediction> preds) {
  require(!preds.empty(), "sample_weighted_rate: no predictions");
  std::size_t correct = 0, total = 0;
  for (const auto& p : preds) {
    for (std::size_t i = 0; i < p.predicted.size(); ++i)
      if (p.predicted[i] == p.truth[i]) ++correct;
    total += p.predicted.size();
  }
  require(total > 0, "sample_weighted_rate: no samples");
  return static_cast<double>(correct) / static_cast<double>(total);
}

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;  // row = true class, col = predicted

  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts[truth * classes + pred]; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * classes + pred];
  }
  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
  }
};

inline ConfusionMatrix confusion(std::span<const TrialPrediction> preds, std::size_t classes) {
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(classes * classes, 0);
  for (const auto& p : preds)
    for (std::size_t i = 0; i < p.predicted.size(); ++i)
      ++cm.at(static_cast<std::size_t>(p.truth[i]), static_cast<std::size_t>(p.predicted[i]));
  return cm;
}

inline void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm,
                                const std::vector<std::string>& class_names) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_confusion_csv: cannot open " + path.string());
  f << "true\\pred";
  for (const auto& n : class_names) f << ',' << n;
  f << '\n';
  for (std::size_t t = 0; t < cm.classes; ++t) {
    f << class_names[t];
    for (std::size_t p = 0; p < cm.classes; ++p) f << ',' << cm.at(t, p);
    f << '\n';
  }
}

/// One row per sample: t,true,pred -- plot-ready track of a recognized trial.
inline void write_prediction_track_csv(const std::filesystem::path& path, const Trial& trial,
                                       const TrialPrediction& pred,
                                       const std::vector<std::string>& class_names) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_prediction_track_csv: cannot open " + path.string());
  f << "t,true,pred\n";
  for (std::size_t i = 0; i < pred.predicted.size(); ++i) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), trial.samples[i].t);
    f.write(buf, r.ptr - buf);
    f << ',' << class_names[static_cast<std::size_t>(pred.truth[i])] << ','
      << class_names[static_cast<std::size_t>(pred.predicted[i])] << '\n';
  }
}

}  // namespace harnn
