// Trial and dataset model plus CSV / manifest ingestion.
//
// Trial CSV: optional header, then rows `t,x,y,z` (segmented trials, class
// given by the manifest) or `t,x,y,z,label` (sequence trials, class name
// per row). UTF-8, '.' decimal point. Timestamps must be non-decreasing;
// they are carried through but never used in the math -- the network is
// sample-synchronous and resampling irregular data is the caller's job.
//
// Manifest JSON: {"classes": [...], "trials": [{"path":..., "role":
// "train"|"test"|"sequence", "label":...}]}. Paths are resolved relative
// to the manifest file. Segmented roles require "label"; sequence trials
// carry labels per row instead.
#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harnn/matrix.hpp"
#include "harnn/rng.hpp"

namespace harnn {

enum class Role { Train, Test, Sequence };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Train: return "train";
    case Role::Test: return "test";
    default: return "sequence";
  }
}

struct Sample {
  double t;   // seconds
  double ax;  // acceleration per axis, in G
  double ay;
  double az;
};

struct Trial {
  std::string id;
  std::vector<Sample> samples;
  std::optional<int> label;        // segmented: one class for the whole trial
  std::vector<int> sample_labels;  // sequence: one class per sample
  double sample_rate = 100.0;      // Hz

  bool segmented() const { return label.has_value(); }
  int label_at(std::size_t i) const { return segmented() ? *label : sample_labels[i]; }
  Vector input_at(std::size_t i) const {
    return {samples[i].ax, samples[i].ay, samples[i].az};
  }
};

struct Dataset {
  std::vector<Trial> trials;
  std::vector<std::string> class_names;
  Role role = Role::Train;
};

struct DatasetBundle {
  Dataset train, test, sequence;
  std::vector<std::string> class_names;
};

namespace detail {

inline bool parse_double(std::string_view field, double& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline int class_index(const std::vector<std::string>& classes, std::string_view name,
                       const std::string& context) {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == name) return static_cast<int>(i);
  throw std::runtime_error(context + ": unknown class name '" + std::string(name) + "'");
}

}  // namespace detail

/// Parse one trial file. segmented_label carries the class for segmented
/// trials; when absent every row must end with a class-name column.
inline Trial load_trial_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& classes,
                            const std::optional<std::string>& segmented_label,
                            double sample_rate = 100.0) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_trial_csv: cannot open " + path.string());
  Trial trial;
  trial.id = path.stem().string();
  trial.sample_rate = sample_rate;
  if (segmented_label)
    trial.label = detail::class_index(classes, *segmented_label, path.string());

  std::string line;
  std::size_t line_no = 0;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    double t;
    if (line_no == 1 && !detail::parse_double(fields[0], t)) continue;  // header row
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (fields.size() < 4) throw std::runtime_error(where + ": expected t,x,y,z[,label]");
    Sample s{};
    if (!detail::parse_double(fields[0], s.t) || !detail::parse_double(fields[1], s.ax) ||
        !detail::parse_double(fields[2], s.ay) || !detail::parse_double(fields[3], s.az))
      throw std::runtime_error(where + ": malformed numeric field");
    if (s.t < prev_t) throw std::runtime_error(where + ": timestamps must be non-decreasing");
    prev_t = s.t;
    if (!segmented_label) {
      if (fields.size() < 5) throw std::runtime_error(where + ": missing label column");
      trial.sample_labels.push_back(detail::class_index(classes, fields[4], where));
    }
    trial.samples.push_back(s);
  }
  if (trial.samples.empty())
    throw std::runtime_error("load_trial_csv: " + path.string() + " has no samples");
  return trial;
}

/// Load every trial named by a manifest, grouped by role.
inline DatasetBundle load_datasets(const std::filesystem::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error("load_datasets: cannot open " + manifest_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_datasets: " + manifest_path.string() + ": " + e.what());
  }
  DatasetBundle bundle;
  for (const auto& c : j.at("classes")) bundle.class_names.push_back(c.get<std::string>());
  if (bundle.class_names.empty())
    throw std::runtime_error("load_datasets: " + manifest_path.string() + " declares no classes");
  const auto& trials = j.at("trials");
  if (trials.empty())
    throw std::runtime_error("load_datasets: " + manifest_path.string() + " lists no trials");

  const auto base = manifest_path.parent_path();
  for (const auto& entry : trials) {
    const auto rel = entry.at("path").get<std::string>();
    const auto path = base / rel;
    if (!std::filesystem::exists(path))
      throw std::runtime_error("load_datasets: trial file not found: " + path.string());
    const auto role_str = entry.at("role").get<std::string>();
    Role role;
    if (role_str == "train") role = Role::Train;
    else if (role_str == "test") role = Role::Test;
    else if (role_str == "sequence") role = Role::Sequence;
    else throw std::runtime_error("load_datasets: unknown role '" + role_str + "' for " + rel);

    std::optional<std::string> label;
    if (role != Role::Sequence) {
      if (!entry.contains("label"))
        throw std::runtime_error("load_datasets: segmented trial " + rel + " needs a label");
      label = entry.at("label").get<std::string>();
    }
    double rate = entry.value("sample_rate", 100.0);
    Trial t = load_trial_csv(path, bundle.class_names, label, rate);
    Dataset& ds = role == Role::Train ? bundle.train
                  : role == Role::Test ? bundle.test
                                       : bundle.sequence;
    ds.trials.push_back(std::move(t));
  }
  for (Dataset* ds : {&bundle.train, &bundle.test, &bundle.sequence})
    ds->class_names = bundle.class_names;
  bundle.train.role = Role::Train;
  bundle.test.role = Role::Test;
  bundle.sequence.role = Role::Sequence;
  return bundle;
}

/// Shuffle trial indices and group them into batches; a final partial
/// batch is kept (its loss is normalized by its true size downstream).
inline std::vector<std::vector<std::size_t>> make_minibatches(const Dataset& ds,
                                                              std::size_t batch_size,
                                                              Rng& rng) {
  require(!ds.trials.empty(), "make_minibatches: empty dataset");
  require(batch_size > 0, "make_minibatches: batch size must be positive");
  std::vector<std::size_t> order(ds.trials.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

/// Write one trial in the loader's format. Doubles are emitted with the
/// shortest round-trip representation, so a load/store cycle is
/// bit-faithful. Sequence trials get the per-row label column.
inline void write_trial_csv(const std::filesystem::path& path, const Trial& trial,
                            const std::vector<std::string>& classes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trial_csv: cannot open " + path.string());
  const bool labelled = !trial.segmented();
  out << (labelled ? "t,x,y,z,label\n" : "t,x,y,z\n");
  char buf[40];
  auto put = [&](double v) {
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, r.ptr - buf);
  };
  for (std::size_t i = 0; i < trial.samples.size(); ++i) {
    const Sample& s = trial.samples[i];
    put(s.t);
    out << ',';
    put(s.ax);
    out << ',';
    put(s.ay);
    out << ',';
    put(s.az);
    if (labelled) {
      const int c = trial.sample_labels[i];
      require(c >= 0 && static_cast<std::size_t>(c) < classes.size(),
              "write_trial_csv: label out of range in trial " + trial.id);
      out << ',' << classes[static_cast<std::size_t>(c)];
    }
    out << '\n';
  }
}

/// Write a whole bundle as trials/<id>.csv files plus manifest.json in
/// `dir`, in the exact shape load_datasets reads back.
inline void write_dataset_tree(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  std::filesystem::create_directories(dir / "trials");
  nlohmann::json manifest;
  manifest["classes"] = bundle.class_names;
  auto& entries = manifest["trials"] = nlohmann::json::array();
  for (const Dataset* ds : {&bundle.train, &bundle.test, &bundle.sequence}) {
    for (const Trial& t : ds->trials) {
      const std::string rel = "trials/" + t.id + ".csv";
      write_trial_csv(dir / rel, t, bundle.class_names);
      nlohmann::json e{{"path", rel}, {"role", role_name(ds->role)}, {"sample_rate", t.sample_rate}};
      if (t.segmented()) e["label"] = bundle.class_names.at(static_cast<std::size_t>(*t.label));
      entries.push_back(std::move(e));
    }
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("write_dataset_tree: cannot open manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

struct WindowSlice {
  std::vector<Vector> inputs;  // 3-vectors, bit-equal to the source samples
  std::vector<int> targets;    // per-step class
};

inline WindowSlice slice_window(const Trial& trial, std::size_t k, std::size_t len) {
  require(k + len <= trial.samples.size(),
          "slice_window: window [" + std::to_string(k) + ", " + std::to_string(k + len) +
              ") exceeds trial length " + std::to_string(trial.samples.size()));
  WindowSlice out;
  out.inputs.reserve(len);
  out.targets.reserve(len);
  for (std::size_t i = k; i < k + len; ++i) {
    out.inputs.push_back(trial.input_at(i));
    out.targets.push_back(trial.label_at(i));
  }
  return out;
}

}  // namespace harnn
