// Throughput measurement: mean wall-clock recognition time per input
// sample for the network, and per-window feature/classification time for
// the baseline pipeline.
//
// Protocol: one untimed warm-up pass, then `repetitions` timed passes on
// the monotonic clock, strictly single-threaded. The minimum-of-N run is
// the headline number (the standard low-noise latency estimator); every
// raw run is kept in the report for auditability. File I/O and model
// setup are never inside the timed region.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "harnn/baseline.hpp"
#include "harnn/evaluate.hpp"
#include "harnn/features.hpp"
#include "harnn/network.hpp"

namespace harnn {

inline std::string environment_description() {
  std::string cpu = "unknown CPU";
  std::ifstream f("/proc/cpuinfo");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        cpu.erase(0, cpu.find_first_not_of(" \t"));
      }
      break;
    }
  }
  return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

struct RnnThroughput {
  double ms_per_sample = 0.0;              // best (minimum) run
  std::vector<double> run_ms_per_sample;   // every timed run
  std::size_t samples = 0;                 // per pass
  std::size_t trials = 0;
  std::string environment;
};

struct BaselineThroughput {
  double feature_ms_per_window = 0.0;      // from the best run by total
  double classify_ms_per_window = 0.0;
  double total_ms_per_window = 0.0;        // feature + classify of that run
  std::vector<double> run_feature_ms;
  std::vector<double> run_classify_ms;
  std::size_t windows = 0;
  std::string environment;
};

/// Per-sample recognition latency over every trial of the dataset:
/// state reset per trial, one forward step plus argmax per sample.
inline RnnThroughput bench_rnn(const NetworkParams& params, const Dataset& ds,
                               std::size_t repetitions) {
  require(!ds.trials.empty(), "bench_rnn: empty dataset");
  require(repetitions >= 1, "bench_rnn: need at least one repetition");

  RnnThroughput report;
  report.trials = ds.trials.size();
  for (const Trial& t : ds.trials) report.samples += t.samples.size();
  report.environment = environment_description();

  using clock = std::chrono::steady_clock;
  std::size_t sink = 0;  // consumed below so the passes cannot be elided
  auto pass = [&] {
    for (const Trial& t : ds.trials) {
      const TrialPrediction p = recognize_trial(params, t);
      sink += p.predicted.size();
    }
  };

  pass();  // warm-up, untimed
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto t0 = clock::now();
    pass();
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    report.run_ms_per_sample.push_back(ms / static_cast<double>(report.samples));
  }
  require(sink == report.samples * (repetitions + 1), "bench_rnn: prediction count mismatch");
  report.ms_per_sample =
      *std::min_element(report.run_ms_per_sample.begin(), report.run_ms_per_sample.end());
  return report;
}

/// Feature extraction and window classification timed separately over all
/// windows of the dataset. Windowing itself is untimed bookkeeping; the
/// 27-feature computation is the feature stage, subset selection plus the
/// classifier the classification stage.
inline BaselineThroughput bench_baseline(const BaselineModel& model, const Dataset& ds,
                                         const WindowSpec& spec, std::size_t repetitions) {
  require(!ds.trials.empty(), "bench_baseline: empty dataset");
  require(repetitions >= 1, "bench_baseline: need at least one repetition");

  std::vector<Window> windows;
  for (const Trial& t : ds.trials) {
    WindowSpec per_trial = spec;
    per_trial.sample_rate = t.sample_rate;
    auto w = extract_windows(t, per_trial, model.classes);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
  }
  require(!windows.empty(), "bench_baseline: dataset yields no windows");

  BaselineThroughput report;
  report.windows = windows.size();
  report.environment = environment_description();
  const double inv_w = 1.0 / static_cast<double>(windows.size());

  using clock = std::chrono::steady_clock;
  std::vector<FeatureVector> feats(windows.size());
  double sink = 0.0;
  auto feature_pass = [&] {
    for (std::size_t i = 0; i < windows.size(); ++i) feats[i] = compute_features(windows[i].samples);
    sink += feats.back()[0];
  };
  auto classify_pass = [&] {
    for (const FeatureVector& fv : feats) sink += classify_window(model, select_features(fv));
  };

  feature_pass();  // warm-up
  classify_pass();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto t0 = clock::now();
    feature_pass();
    const auto t1 = clock::now();
    classify_pass();
    const auto t2 = clock::now();
    report.run_feature_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count() * inv_w);
    report.run_classify_ms.push_back(
        std::chrono::duration<double, std::milli>(t2 - t1).count() * inv_w);
  }
  require(std::isfinite(sink), "bench_baseline: non-finite classifier output");

  std::size_t best = 0;
  for (std::size_t r = 1; r < repetitions; ++r)
    if (report.run_feature_ms[r] + report.run_classify_ms[r] <
        report.run_feature_ms[best] + report.run_classify_ms[best])
      best = r;
  report.feature_ms_per_window = report.run_feature_ms[best];
  report.classify_ms_per_window = report.run_classify_ms[best];
  report.total_ms_per_window = report.feature_ms_per_window + report.classify_ms_per_window;
  return report;
}

// ---- report emission --------------------------------------------------------

inline nlohmann::json to_json(const RnnThroughput& r) {
  return {{"kind", "rnn"},
          {"ms_per_sample", r.ms_per_sample},
          {"runs_ms_per_sample", r.run_ms_per_sample},
          {"samples_per_pass", r.samples},
          {"trials", r.trials},
          {"environment", r.environment}};
}

inline nlohmann::json to_json(const BaselineThroughput& r) {
  return {{"kind", "baseline"},
          {"feature_ms_per_window", r.feature_ms_per_window},
          {"classify_ms_per_window", r.classify_ms_per_window},
          {"total_ms_per_window", r.total_ms_per_window},
          {"runs_feature_ms", r.run_feature_ms},
          {"runs_classify_ms", r.run_classify_ms},
          {"windows", r.windows},
          {"environment", r.environment}};
}

inline std::string to_text(const RnnThroughput& r) {
  std::ostringstream out;
  out << "recognition throughput: " << r.ms_per_sample << " ms/sample (best of "
      << r.run_ms_per_sample.size() << " runs)\n"
      << "  " << r.samples << " samples over " << r.trials << " trials per pass\n"
      << "  runs:";
  for (double v : r.run_ms_per_sample) out << ' ' << v;
  out << "\n  environment: " << r.environment << '\n';
  return out.str();
}

inline std::string to_text(const BaselineThroughput& r) {
  std::ostringstream out;
  out << "baseline throughput per window (best of " << r.run_feature_ms.size() << " runs):\n"
      << "  features: " << r.feature_ms_per_window << " ms,  classify: "
      << r.classify_ms_per_window << " ms,  total: " << r.total_ms_per_window << " ms\n"
      << "  " << r.windows << " windows per pass\n"
      << "  environment: " << r.environment << '\n';
  return out.str();
}

}  // namespace harnn
