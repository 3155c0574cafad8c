// Dataset model: CSV parsing, manifests, batching, slicing, writers and
// the synthetic generator.
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace harnn;

namespace {

const std::vector<std::string> kClasses{"stay", "walk", "jog"};

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST(TrialCsv, ParsesHeaderAndValues) {
  const auto dir = testsup::scratch_dir("csv_basic");
  write_file(dir / "walk_01.csv",
             "t,x,y,z\n"
             "0.00,0.1,-0.25,0.9765625\n"
             "0.01,0.2,0.0,1.0\n");
  const Trial t = load_trial_csv(dir / "walk_01.csv", kClasses, "walk");
  EXPECT_EQ(t.id, "walk_01");
  ASSERT_TRUE(t.segmented());
  EXPECT_EQ(*t.label, 1);
  ASSERT_EQ(t.samples.size(), 2u);
  EXPECT_DOUBLE_EQ(t.samples[0].ay, -0.25);
  EXPECT_DOUBLE_EQ(t.samples[0].az, 0.9765625);
  EXPECT_DOUBLE_EQ(t.samples[1].t, 0.01);
}

TEST(TrialCsv, ErrorsCarryFileAndLine) {
  const auto dir = testsup::scratch_dir("csv_errors");
  write_file(dir / "bad.csv", "t,x,y,z\n0.0,0.1,0.2,0.3\n0.01,oops,0.2,0.3\n");
  try {
    load_trial_csv(dir / "bad.csv", kClasses, "stay");
    FAIL() << "malformed numeric accepted";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.csv"), std::string::npos);
    EXPECT_NE(msg.find("line 3"), std::string::npos);
  }

  write_file(dir / "order.csv", "0.0,0.1,0.2,0.3\n-0.5,0.1,0.2,0.3\n");
  EXPECT_THROW(load_trial_csv(dir / "order.csv", kClasses, "stay"), std::runtime_error);

  write_file(dir / "short.csv", "0.0,0.1,0.2\n");
  EXPECT_THROW(load_trial_csv(dir / "short.csv", kClasses, "stay"), std::runtime_error);

  write_file(dir / "empty.csv", "t,x,y,z\n");
  EXPECT_THROW(load_trial_csv(dir / "empty.csv", kClasses, "stay"), std::runtime_error);
}

TEST(TrialCsv, SequenceTrialsNeedPerRowLabels) {
  const auto dir = testsup::scratch_dir("csv_seq");
  write_file(dir / "seq.csv", "0.0,0.1,0.2,0.3,walk\n0.01,0.1,0.2,0.3,jog\n");
  const Trial t = load_trial_csv(dir / "seq.csv", kClasses, std::nullopt);
  EXPECT_FALSE(t.segmented());
  ASSERT_EQ(t.sample_labels.size(), 2u);
  EXPECT_EQ(t.sample_labels[0], 1);
  EXPECT_EQ(t.sample_labels[1], 2);
  EXPECT_EQ(t.label_at(1), 2);

  write_file(dir / "nolabel.csv", "0.0,0.1,0.2,0.3\n");
  EXPECT_THROW(load_trial_csv(dir / "nolabel.csv", kClasses, std::nullopt), std::runtime_error);

  write_file(dir / "unknown.csv", "0.0,0.1,0.2,0.3,fly\n");
  EXPECT_THROW(load_trial_csv(dir / "unknown.csv", kClasses, std::nullopt), std::runtime_error);
}

TEST(Manifest, LoadsRolesAndLabels) {
  const auto dir = testsup::scratch_dir("manifest");
  write_file(dir / "a.csv", "0.0,1,2,3\n0.01,4,5,6\n");
  write_file(dir / "b.csv", "0.0,1,2,3\n");
  write_file(dir / "s.csv", "0.0,1,2,3,jog\n");
  write_file(dir / "manifest.json", R"({
    "classes": ["stay", "walk", "jog"],
    "trials": [
      {"path": "a.csv", "role": "train", "label": "walk"},
      {"path": "b.csv", "role": "test", "label": "stay", "sample_rate": 50.0},
      {"path": "s.csv", "role": "sequence"}
    ]})");
  const DatasetBundle bundle = load_datasets(dir / "manifest.json");
  EXPECT_EQ(bundle.class_names, kClasses);
  ASSERT_EQ(bundle.train.trials.size(), 1u);
  ASSERT_EQ(bundle.test.trials.size(), 1u);
  ASSERT_EQ(bundle.sequence.trials.size(), 1u);
  EXPECT_EQ(*bundle.train.trials[0].label, 1);
  EXPECT_DOUBLE_EQ(bundle.test.trials[0].sample_rate, 50.0);
  EXPECT_EQ(bundle.sequence.trials[0].sample_labels[0], 2);
}

TEST(Manifest, RejectsMissingFilesRolesAndLabels) {
  const auto dir = testsup::scratch_dir("manifest_bad");
  write_file(dir / "a.csv", "0.0,1,2,3\n");

  write_file(dir / "m1.json", R"({"classes":["a","b"],"trials":[{"path":"gone.csv","role":"train","label":"a"}]})");
  try {
    load_datasets(dir / "m1.json");
    FAIL() << "missing trial file accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("gone.csv"), std::string::npos);
  }

  write_file(dir / "m2.json", R"({"classes":["a","b"],"trials":[{"path":"a.csv","role":"validate","label":"a"}]})");
  EXPECT_THROW(load_datasets(dir / "m2.json"), std::runtime_error);

  write_file(dir / "m3.json", R"({"classes":["a","b"],"trials":[{"path":"a.csv","role":"train"}]})");
  EXPECT_THROW(load_datasets(dir / "m3.json"), std::runtime_error);

  EXPECT_THROW(load_datasets(dir / "nothere.json"), std::runtime_error);
}

TEST(Minibatches, PartitionWithFinalShortBatch) {
  // 432 trials at batch size 20 -> 21 full batches plus one of 12.
  Dataset ds;
  ds.trials.resize(432);
  Rng rng(4);
  const auto batches = make_minibatches(ds, 20, rng);
  ASSERT_EQ(batches.size(), 22u);
  std::set<std::size_t> seen;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    EXPECT_EQ(batches[b].size(), b + 1 < batches.size() ? 20u : 12u);
    for (std::size_t idx : batches[b]) {
      EXPECT_TRUE(seen.insert(idx).second) << "index repeated";
      EXPECT_LT(idx, 432u);
    }
  }
  EXPECT_EQ(seen.size(), 432u);

  // Determinism per seed, different order across seeds.
  Rng r1(4), r2(4), r3(5);
  const auto b1 = make_minibatches(ds, 20, r1);
  const auto b2 = make_minibatches(ds, 20, r2);
  const auto b3 = make_minibatches(ds, 20, r3);
  EXPECT_EQ(b1, b2);
  EXPECT_NE(b1, b3);
}

TEST(SliceWindow, ExtractsInputsAndTargets) {
  Trial t;
  t.label = 2;
  for (int i = 0; i < 10; ++i)
    t.samples.push_back({0.01 * i, 1.0 * i, 2.0 * i, 3.0 * i});
  const WindowSlice s = slice_window(t, 3, 4);
  ASSERT_EQ(s.inputs.size(), 4u);
  EXPECT_DOUBLE_EQ(s.inputs[0][0], 3.0);
  EXPECT_DOUBLE_EQ(s.inputs[3][2], 18.0);
  EXPECT_EQ(s.targets[0], 2);
  EXPECT_THROW(slice_window(t, 8, 4), std::invalid_argument);
}

TEST(Writers, TrialRoundTripIsBitFaithful) {
  const auto dir = testsup::scratch_dir("trial_roundtrip");
  Rng rng(77);
  Trial t;
  t.id = "rt";
  t.label = 0;
  for (int i = 0; i < 50; ++i) {
    Sample s;
    s.t = i * 0.01;
    s.ax = rng.gaussian(0.0, 1.0);
    s.ay = rng.uniform(-2.0, 2.0);
    s.az = rng.gaussian(-0.5, 0.3);
    t.samples.push_back(s);
  }
  write_trial_csv(dir / "rt.csv", t, kClasses);
  const Trial back = load_trial_csv(dir / "rt.csv", kClasses, "stay");
  ASSERT_EQ(back.samples.size(), t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].t, t.samples[i].t);
    EXPECT_EQ(back.samples[i].ax, t.samples[i].ax);
    EXPECT_EQ(back.samples[i].ay, t.samples[i].ay);
    EXPECT_EQ(back.samples[i].az, t.samples[i].az);
  }
}

TEST(Writers, DatasetTreeRoundTrip) {
  const auto dir = testsup::scratch_dir("tree_roundtrip");
  SynthSpec spec;
  spec.num_classes = 3;
  spec.train_trials_per_class = 2;
  spec.test_trials_per_class = 1;
  spec.sequence_trials = 1;
  spec.trial_len = 120;
  spec.seed = 6;
  const DatasetBundle bundle = synth_generate(spec);
  write_dataset_tree(dir, bundle);
  const DatasetBundle back = load_datasets(dir / "manifest.json");

  EXPECT_EQ(back.class_names, bundle.class_names);
  ASSERT_EQ(back.train.trials.size(), 6u);
  ASSERT_EQ(back.test.trials.size(), 3u);
  ASSERT_EQ(back.sequence.trials.size(), 1u);
  for (std::size_t i = 0; i < bundle.train.trials.size(); ++i) {
    const Trial &a = bundle.train.trials[i], &b = back.train.trials[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(*a.label, *b.label);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
      EXPECT_EQ(a.samples[k].ax, b.samples[k].ax);
      EXPECT_EQ(a.samples[k].az, b.samples[k].az);
    }
  }
  EXPECT_EQ(back.sequence.trials[0].sample_labels, bundle.sequence.trials[0].sample_labels);
}

TEST(Synth, CountsLengthsAndDeterminism) {
  SynthSpec spec;
  spec.num_classes = 4;
  spec.train_trials_per_class = 3;
  spec.test_trials_per_class = 2;
  spec.sequence_trials = 2;
  spec.trial_len = 200;
  spec.seed = 11;
  const DatasetBundle a = synth_generate(spec);
  ASSERT_EQ(a.train.trials.size(), 12u);
  ASSERT_EQ(a.test.trials.size(), 8u);
  ASSERT_EQ(a.sequence.trials.size(), 2u);
  for (const Trial& t : a.train.trials) EXPECT_EQ(t.samples.size(), 200u);
  for (const Trial& t : a.sequence.trials) {
    EXPECT_EQ(t.samples.size(), 800u);  // one segment per class
    ASSERT_EQ(t.sample_labels.size(), 800u);
    std::set<int> seen(t.sample_labels.begin(), t.sample_labels.end());
    EXPECT_EQ(seen.size(), 4u);  // every class appears exactly once
  }

  const DatasetBundle b = synth_generate(spec);
  for (std::size_t i = 0; i < a.train.trials.size(); ++i)
    for (std::size_t k = 0; k < a.train.trials[i].samples.size(); ++k)
      ASSERT_EQ(a.train.trials[i].samples[k].ax, b.train.trials[i].samples[k].ax);

  SynthSpec other = spec;
  other.seed = 12;
  const DatasetBundle c = synth_generate(other);
  EXPECT_NE(a.train.trials[0].samples[0].ax, c.train.trials[0].samples[0].ax);
}

TEST(Synth, ClassFrequencyIsRecoverableByTemplateMatching) {
  // Independent oracle: project each trial's x-axis onto sin/cos at every
  // class frequency; the class's own frequency must carry the most power.
  SynthSpec spec;  // defaults: 6 classes, 25+6 trials each, 2000 samples
  spec.sequence_trials = 0;
  spec.seed = 21;
  SynthSpec resolved = spec;
  resolved.resolve_defaults();
  const DatasetBundle bundle = synth_generate(spec);

  std::size_t total = 0, hits = 0;
  for (const Dataset* ds : {&bundle.train, &bundle.test}) {
    for (const Trial& trial : ds->trials) {
      std::size_t best = 0;
      double best_power = -1.0;
      for (std::size_t c = 0; c < resolved.frequencies_hz.size(); ++c) {
        const double f = resolved.frequencies_hz[c];
        double ss = 0.0, sc = 0.0;
        for (const Sample& s : trial.samples) {
          const double w = 2.0 * std::numbers::pi * f * s.t;
          ss += s.ax * std::sin(w);
          sc += s.ax * std::cos(w);
        }
        const double power = ss * ss + sc * sc;
        if (power > best_power) {
          best_power = power;
          best = c;
        }
      }
      ++total;
      if (static_cast<int>(best) == *trial.label) ++hits;
    }
  }
  EXPECT_EQ(total, 186u);  // 6 * (25 + 6)
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(total), 0.99);
}

TEST(Synth, ValidatesSpec) {
  SynthSpec spec;
  spec.num_classes = 1;
  EXPECT_THROW(synth_generate(spec), std::invalid_argument);
  SynthSpec dup;
  dup.num_classes = 2;
  dup.frequencies_hz = {2.0, 2.0};
  dup.amplitudes_g = {1.0, 1.0};
  EXPECT_THROW(synth_generate(dup), std::invalid_argument);
}
