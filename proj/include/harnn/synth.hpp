// Synthetic accelerometer-style dataset generator.
//
// Each class is a three-axis sinusoid with its own base frequency and
// amplitude; the axes share the class frequency but are phase-shifted by
// 0, 2pi/3 and 4pi/3, each trial gets a random starting phase, and white
// gaussian noise is added per sample. Sequence trials concatenate one
// segment per class (in a shuffled order) with per-sample labels.
// Generation is fully determined by the seed.
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "harnn/dataset.hpp"
#include "harnn/rng.hpp"

namespace harnn {

struct SynthSpec {
  std::size_t num_classes = 6;
  std::vector<double> frequencies_hz;  // per class; defaulted when empty
  std::vector<double> amplitudes_g;    // per class; defaulted when empty
  double noise_std_g = 0.05;
  double sample_rate = 100.0;
  std::size_t trial_len = 2000;
  std::size_t train_trials_per_class = 25;
  std::size_t test_trials_per_class = 6;
  std::size_t sequence_trials = 3;
  std::uint64_t seed = 1;

  void resolve_defaults() {
    if (frequencies_hz.empty())
      for (std::size_t c = 0; c < num_classes; ++c)
        frequencies_hz.push_back(1.0 + 1.1 * static_cast<double>(c));
    if (amplitudes_g.empty())
      for (std::size_t c = 0; c < num_classes; ++c)
        amplitudes_g.push_back(0.6 + 0.08 * static_cast<double>(c));
  }

  void validate() const {
    require(num_classes >= 2, "SynthSpec: need at least two classes");
    require(frequencies_hz.size() == num_classes && amplitudes_g.size() == num_classes,
            "SynthSpec: per-class frequency/amplitude count mismatch");
    require(trial_len > 0 && sample_rate > 0, "SynthSpec: empty trials");
    require(noise_std_g >= 0, "SynthSpec: negative noise");
    for (std::size_t a = 0; a < num_classes; ++a)
      for (std::size_t b = a + 1; b < num_classes; ++b)
        require(frequencies_hz[a] != frequencies_hz[b], "SynthSpec: frequencies must be distinct");
  }
};

namespace detail {

inline void append_class_segment(Trial& trial, const SynthSpec& spec, std::size_t cls,
                                 std::size_t len, Rng& rng) {
  static constexpr double kAxisPhase[3] = {0.0, 2.0 * std::numbers::pi / 3.0,
                                           4.0 * std::numbers::pi / 3.0};
  const double f = spec.frequencies_hz[cls];
  const double a = spec.amplitudes_g[cls];
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const std::size_t start = trial.samples.size();
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t n = start + i;
    const double t = static_cast<double>(n) / spec.sample_rate;
    Sample s{};
    s.t = t;
    double* axes[3] = {&s.ax, &s.ay, &s.az};
    for (int ax = 0; ax < 3; ++ax) {
      double v = a * std::sin(2.0 * std::numbers::pi * f * t + phase + kAxisPhase[ax]);
      if (spec.noise_std_g > 0) v += rng.gaussian(0.0, spec.noise_std_g);
      *axes[ax] = v;
    }
    trial.samples.push_back(s);
  }
}

}  // namespace detail

inline DatasetBundle synth_generate(SynthSpec spec) {
  spec.resolve_defaults();
  spec.validate();
  Rng rng(spec.seed);
  DatasetBundle bundle;
  for (std::size_t c = 0; c < spec.num_classes; ++c)
    bundle.class_names.push_back("class_" + std::to_string(c));

  auto make_segmented = [&](Dataset& ds, std::size_t per_class, const char* tag) {
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        Trial t;
        t.id = std::string(tag) + "_c" + std::to_string(c) + "_t" + std::to_string(i);
        t.sample_rate = spec.sample_rate;
        t.label = static_cast<int>(c);
        detail::append_class_segment(t, spec, c, spec.trial_len, rng);
        ds.trials.push_back(std::move(t));
      }
    }
  };
  make_segmented(bundle.train, spec.train_trials_per_class, "train");
  make_segmented(bundle.test, spec.test_trials_per_class, "test");

  for (std::size_t i = 0; i < spec.sequence_trials; ++i) {
    Trial t;
    t.id = "seq_t" + std::to_string(i);
    t.sample_rate = spec.sample_rate;
    std::vector<std::size_t> order(spec.num_classes);
    for (std::size_t c = 0; c < spec.num_classes; ++c) order[c] = c;
    rng.shuffle(order);
    for (std::size_t cls : order) {
      detail::append_class_segment(t, spec, cls, spec.trial_len, rng);
      t.sample_labels.insert(t.sample_labels.end(), spec.trial_len, static_cast<int>(cls));
    }
    bundle.sequence.trials.push_back(std::move(t));
  }

  for (Dataset* ds : {&bundle.train, &bundle.test, &bundle.sequence})
    ds->class_names = bundle.class_names;
  bundle.train.role = Role::Train;
  bundle.test.role = Role::Test;
  bundle.sequence.role = Role::Sequence;
  return bundle;
}

}  // namespace harnn
