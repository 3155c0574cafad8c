// harnn -- command-line front end tying the engine together.
//
//   train     fit a network on a dataset manifest, write model + stats
//   eval      recognition rates, confusion matrix, prediction tracks
//   bench     per-sample throughput (and the baseline pipeline with --baseline)
//   synth     generate a synthetic dataset tree
//   features  dump the 27 window features as CSV
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error. Every
// command that takes --seed is reproducible: identical invocations write
// byte-identical artifacts. A JSON --config file may supply any long flag
// of its command (same key names, no leading dashes); explicit flags win,
// unknown keys are errors.
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "harnn.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw std::invalid_argument(what + " not found: " + path);
}

/// JSON config merge: keys mirror the command's long flags; values apply
/// only where the flag was not given on the command line.
class ConfigBinding {
 public:
  explicit ConfigBinding(CLI::App* cmd) : cmd_(cmd) {}

  template <class T>
  void bind(const std::string& key, T& target) {
    setters_[key] = [&target, key](const json& v) {
      try {
        target = v.get<T>();
      } catch (const json::exception&) {
        throw std::invalid_argument("config key '" + key + "' has the wrong type");
      }
    };
  }

  void apply(const std::string& file) const {
    if (file.empty()) return;
    require_file(file, "config file");
    std::ifstream f(file);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config file " + file + ": " + std::string(e.what()));
    }
    if (!j.is_object())
      throw std::invalid_argument("config file " + file + " must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end())
        throw std::invalid_argument("unknown config key '" + key + "' in " + file);
      if (cmd_->count("--" + key) > 0) continue;  // command line wins
      it->second(value);
    }
  }

 private:
  CLI::App* cmd_;
  std::map<std::string, std::function<void(const json&)>> setters_;
};

const harnn::Dataset& pick_split(const harnn::DatasetBundle& bundle, const std::string& name) {
  const harnn::Dataset* ds = name == "train"      ? &bundle.train
                             : name == "test"     ? &bundle.test
                             : name == "sequence" ? &bundle.sequence
                                                  : nullptr;
  if (ds == nullptr) throw std::invalid_argument("unknown split '" + name + "'");
  if (ds->trials.empty())
    throw std::invalid_argument("split '" + name + "' has no trials in this manifest");
  return *ds;
}

struct WindowTable {
  std::vector<harnn::FeatureVector> rows;
  std::vector<harnn::SelectedFeatures> selected;
  std::vector<int> labels;
};

WindowTable collect_windows(const harnn::Dataset& ds, harnn::WindowSpec spec,
                            std::size_t classes) {
  WindowTable table;
  for (const harnn::Trial& t : ds.trials) {
    spec.sample_rate = t.sample_rate;
    for (const harnn::Window& w : harnn::extract_windows(t, spec, classes)) {
      table.rows.push_back(harnn::compute_features(w.samples));
      table.selected.push_back(harnn::select_features(table.rows.back()));
      table.labels.push_back(w.label);
    }
  }
  return table;
}

// ---- train ------------------------------------------------------------------

void setup_train(CLI::App& app) {
  struct Opts {
    std::string manifest, out = "out", config;
    std::size_t layers = 3, units = 60;
    harnn::TrainConfig train;
    bool quiet = false;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("train", "Train a network on a dataset manifest");
  auto binding = std::make_shared<ConfigBinding>(cmd);

  cmd->add_option("--manifest", o->manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
  cmd->add_option("--layers", o->layers, "Internal LSTM layers")->capture_default_str();
  cmd->add_option("--units", o->units, "Units per internal layer")->capture_default_str();
  cmd->add_option("--truncated-time", o->train.truncated_time, "BPTT chunk length T")
      ->capture_default_str();
  cmd->add_option("--clip", o->train.clip_c, "Gradient clipping threshold c")
      ->capture_default_str();
  cmd->add_option("--dropout", o->train.dropout_p, "Dropout rate p")->capture_default_str();
  cmd->add_option("--batch", o->train.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--window", o->train.window, "Samples per trial per epoch K'")
      ->capture_default_str();
  cmd->add_option("--epochs", o->train.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--alpha", o->train.adam.alpha, "Adam step size")->capture_default_str();
  cmd->add_option("--beta1", o->train.adam.beta1, "Adam first-moment decay")
      ->capture_default_str();
  cmd->add_option("--beta2", o->train.adam.beta2, "Adam second-moment decay")
      ->capture_default_str();
  cmd->add_option("--eps", o->train.adam.eps, "Adam epsilon")->capture_default_str();
  cmd->add_option("--seed", o->train.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--threads", o->train.threads, "Worker threads (1 = reference)")
      ->capture_default_str();
  cmd->add_flag("--quiet", o->quiet, "Suppress per-epoch progress lines");
  cmd->add_option("--config", o->config, "JSON config file (flags take precedence)");

  binding->bind("manifest", o->manifest);
  binding->bind("out", o->out);
  binding->bind("layers", o->layers);
  binding->bind("units", o->units);
  binding->bind("truncated-time", o->train.truncated_time);
  binding->bind("clip", o->train.clip_c);
  binding->bind("dropout", o->train.dropout_p);
  binding->bind("batch", o->train.batch_size);
  binding->bind("window", o->train.window);
  binding->bind("epochs", o->train.epochs);
  binding->bind("alpha", o->train.adam.alpha);
  binding->bind("beta1", o->train.adam.beta1);
  binding->bind("beta2", o->train.adam.beta2);
  binding->bind("eps", o->train.adam.eps);
  binding->bind("seed", o->train.seed);
  binding->bind("threads", o->train.threads);

  cmd->callback([o, binding, cmd] {
    binding->apply(o->config);
    require_file(o->manifest, "manifest");
    const harnn::DatasetBundle bundle = harnn::load_datasets(o->manifest);
    if (bundle.train.trials.empty())
      throw std::invalid_argument("manifest " + o->manifest + " has no training trials");

    harnn::NetworkConfig net;
    net.input_dim = 3;
    net.internal_layers = o->layers;
    net.units = o->units;
    net.classes = bundle.class_names.size();
    net.validate();
    o->train.validate();

    fs::create_directories(o->out);
    const harnn::TrainRun run =
        harnn::train(net, o->train, bundle, o->quiet ? nullptr : &std::cout);

    const json meta = {{"classes", bundle.class_names},
                       {"train",
                        {{"truncated_time", o->train.truncated_time},
                         {"clip", o->train.clip_c},
                         {"dropout", o->train.dropout_p},
                         {"batch", o->train.batch_size},
                         {"window", o->train.window},
                         {"epochs", o->train.epochs},
                         {"alpha", o->train.adam.alpha},
                         {"beta1", o->train.adam.beta1},
                         {"beta2", o->train.adam.beta2},
                         {"eps", o->train.adam.eps}}}};
    const fs::path out(o->out);
    harnn::save_model(out / "model.bin", run.params, o->train.seed, meta);
    harnn::write_stats_csv(out / "stats.csv", run.log);
    std::cout << "wrote " << (out / "model.bin").string() << " and "
              << (out / "stats.csv").string() << '\n';
    (void)cmd;
  });
}

// ---- eval -------------------------------------------------------------------

void setup_eval(CLI::App& app) {
  struct Opts {
    std::string model, manifest, split = "test", out = "out", config;
    std::size_t threads = 1;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("eval", "Evaluate a trained model on a dataset split");
  auto binding = std::make_shared<ConfigBinding>(cmd);

  cmd->add_option("--model", o->model, "Model file from `train`")->required();
  cmd->add_option("--manifest", o->manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--split", o->split, "Split to evaluate: train|test|sequence")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
  cmd->add_option("--threads", o->threads, "Evaluation threads (predictions unchanged)")
      ->capture_default_str();
  cmd->add_option("--config", o->config, "JSON config file (flags take precedence)");
  binding->bind("model", o->model);
  binding->bind("manifest", o->manifest);
  binding->bind("split", o->split);
  binding->bind("out", o->out);
  binding->bind("threads", o->threads);

  cmd->callback([o, binding] {
    binding->apply(o->config);
    require_file(o->model, "model file");
    require_file(o->manifest, "manifest");
    const harnn::ModelFile mf = harnn::load_model(o->model);
    const harnn::DatasetBundle bundle = harnn::load_datasets(o->manifest);
    const harnn::NetworkConfig net = mf.params.config();
    if (net.classes != bundle.class_names.size())
      throw std::invalid_argument("model has " + std::to_string(net.classes) +
                                  " classes but manifest declares " +
                                  std::to_string(bundle.class_names.size()));
    const harnn::Dataset& ds = pick_split(bundle, o->split);

    const auto preds = harnn::recognize_dataset(mf.params, ds, o->threads);
    const double rate = harnn::dataset_rate(preds);
    const double weighted = harnn::sample_weighted_rate(preds);
    const auto cm = harnn::confusion(preds, net.classes);

    const fs::path out(o->out);
    fs::create_directories(out / "tracks");
    harnn::write_confusion_csv(out / "confusion.csv", cm, bundle.class_names);
    for (std::size_t i = 0; i < preds.size(); ++i)
      harnn::write_prediction_track_csv(out / "tracks" / (preds[i].trial_id + ".csv"),
                                        ds.trials[i], preds[i], bundle.class_names);

    std::cout << "split: " << o->split << " (" << ds.trials.size() << " trials, " << cm.total()
              << " samples)\n"
              << "recognition rate (mean over trials): " << rate << '\n'
              << "recognition rate (sample-weighted):  " << weighted << '\n'
              << "wrote " << (out / "confusion.csv").string() << " and per-trial tracks\n";
  });
}

// ---- bench ------------------------------------------------------------------

void setup_bench(CLI::App& app) {
  struct Opts {
    std::string model, manifest, split = "sequence", out = "out", config;
    std::size_t reps = 5;
    bool baseline = false;
    harnn::WindowSpec window;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("bench", "Measure recognition throughput");
  auto binding = std::make_shared<ConfigBinding>(cmd);

  cmd->add_option("--model", o->model, "Model file from `train`")->required();
  cmd->add_option("--manifest", o->manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--split", o->split, "Split to benchmark on")->capture_default_str();
  cmd->add_option("--reps", o->reps, "Timed repetitions (minimum reported)")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
  cmd->add_flag("--baseline", o->baseline,
                "Also benchmark the feature pipeline (classifier fit on the train split)");
  cmd->add_option("--window-seconds", o->window.window_seconds, "Baseline window length")
      ->capture_default_str();
  cmd->add_option("--shift-seconds", o->window.shift_seconds, "Baseline window shift")
      ->capture_default_str();
  cmd->add_option("--config", o->config, "JSON config file (flags take precedence)");
  binding->bind("model", o->model);
  binding->bind("manifest", o->manifest);
  binding->bind("split", o->split);
  binding->bind("reps", o->reps);
  binding->bind("out", o->out);
  binding->bind("baseline", o->baseline);
  binding->bind("window-seconds", o->window.window_seconds);
  binding->bind("shift-seconds", o->window.shift_seconds);

  cmd->callback([o, binding] {
    binding->apply(o->config);
    require_file(o->model, "model file");
    require_file(o->manifest, "manifest");
    const harnn::ModelFile mf = harnn::load_model(o->model);
    const harnn::DatasetBundle bundle = harnn::load_datasets(o->manifest);
    const harnn::Dataset& ds = pick_split(bundle, o->split);
    const fs::path out(o->out);
    fs::create_directories(out);

    const harnn::RnnThroughput rep = harnn::bench_rnn(mf.params, ds, o->reps);
    std::cout << harnn::to_text(rep);
    std::ofstream(out / "bench_rnn.json") << harnn::to_json(rep).dump(2) << '\n';

    if (o->baseline) {
      if (bundle.train.trials.empty())
        throw std::invalid_argument("--baseline needs train trials in the manifest");
      const std::size_t classes = bundle.class_names.size();
      const WindowTable table = collect_windows(bundle.train, o->window, classes);
      const harnn::BaselineModel bl =
          harnn::train_baseline(table.selected, table.labels, classes);
      const harnn::BaselineThroughput brep = harnn::bench_baseline(bl, ds, o->window, o->reps);
      std::cout << harnn::to_text(brep);
      std::ofstream(out / "bench_baseline.json") << harnn::to_json(brep).dump(2) << '\n';
    }
  });
}

// ---- synth ------------------------------------------------------------------

void setup_synth(CLI::App& app) {
  struct Opts {
    harnn::SynthSpec spec;
    std::string out = "synth-data", config;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("synth", "Generate a synthetic dataset tree");
  auto binding = std::make_shared<ConfigBinding>(cmd);

  cmd->add_option("--classes", o->spec.num_classes, "Activity classes")->capture_default_str();
  cmd->add_option("--trials-per-class", o->spec.train_trials_per_class, "Training trials per class")
      ->capture_default_str();
  cmd->add_option("--test-trials-per-class", o->spec.test_trials_per_class,
                  "Test trials per class")
      ->capture_default_str();
  cmd->add_option("--sequence-trials", o->spec.sequence_trials, "Concatenated sequence trials")
      ->capture_default_str();
  cmd->add_option("--len", o->spec.trial_len, "Samples per segmented trial")
      ->capture_default_str();
  cmd->add_option("--rate", o->spec.sample_rate, "Sample rate in Hz")->capture_default_str();
  cmd->add_option("--noise", o->spec.noise_std_g, "Gaussian noise sigma in G")
      ->capture_default_str();
  cmd->add_option("--seed", o->spec.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
  cmd->add_option("--config", o->config, "JSON config file (flags take precedence)");
  binding->bind("classes", o->spec.num_classes);
  binding->bind("trials-per-class", o->spec.train_trials_per_class);
  binding->bind("test-trials-per-class", o->spec.test_trials_per_class);
  binding->bind("sequence-trials", o->spec.sequence_trials);
  binding->bind("len", o->spec.trial_len);
  binding->bind("rate", o->spec.sample_rate);
  binding->bind("noise", o->spec.noise_std_g);
  binding->bind("seed", o->spec.seed);
  binding->bind("out", o->out);

  cmd->callback([o, binding] {
    binding->apply(o->config);
    const harnn::DatasetBundle bundle = harnn::synth_generate(o->spec);
    harnn::write_dataset_tree(o->out, bundle);
    std::cout << "wrote " << bundle.train.trials.size() << " train / "
              << bundle.test.trials.size() << " test / " << bundle.sequence.trials.size()
              << " sequence trials under " << o->out << '\n';
  });
}

// ---- features ---------------------------------------------------------------

void setup_features(CLI::App& app) {
  struct Opts {
    std::string manifest, split = "all", out = "features.csv", config;
    harnn::WindowSpec window;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("features", "Dump the 27 window features as CSV");
  auto binding = std::make_shared<ConfigBinding>(cmd);

  cmd->add_option("--manifest", o->manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--split", o->split, "train|test|sequence|all")->capture_default_str();
  cmd->add_option("--out", o->out, "Output CSV path")->capture_default_str();
  cmd->add_option("--window-seconds", o->window.window_seconds, "Window length")
      ->capture_default_str();
  cmd->add_option("--shift-seconds", o->window.shift_seconds, "Window shift")
      ->capture_default_str();
  cmd->add_option("--config", o->config, "JSON config file (flags take precedence)");
  binding->bind("manifest", o->manifest);
  binding->bind("split", o->split);
  binding->bind("out", o->out);
  binding->bind("window-seconds", o->window.window_seconds);
  binding->bind("shift-seconds", o->window.shift_seconds);

  cmd->callback([o, binding] {
    binding->apply(o->config);
    require_file(o->manifest, "manifest");
    const harnn::DatasetBundle bundle = harnn::load_datasets(o->manifest);
    const std::size_t classes = bundle.class_names.size();

    WindowTable table;
    if (o->split == "all") {
      for (const harnn::Dataset* ds : {&bundle.train, &bundle.test, &bundle.sequence}) {
        WindowTable part = collect_windows(*ds, o->window, classes);
        table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
        table.labels.insert(table.labels.end(), part.labels.begin(), part.labels.end());
      }
    } else {
      table = collect_windows(pick_split(bundle, o->split), o->window, classes);
    }
    if (table.rows.empty())
      throw std::invalid_argument("no windows produced; trials shorter than the window?");
    harnn::write_features_csv(o->out, table.rows, table.labels);
    std::cout << "wrote " << table.rows.size() << " windows to " << o->out << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harnn: per-sample activity recognition with a from-scratch LSTM engine"};
  app.require_subcommand(1);
  setup_train(app);
  setup_eval(app);
  setup_bench(app);
  setup_synth(app);
  setup_features(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
