// Loss minimization: truncated backpropagation through time, gradient
// clipping, Adam, inverted dropout and the epoch loop.
//
// One weight update covers one truncation range of one mini-batch: every
// trial in the batch runs a forward/backward chunk from its carried
// state, per-trial gradients are averaged (so gradient scale does not
// depend on batch size), clipped as one global vector, and applied with
// Adam. Hidden and cell values carry across chunk boundaries inside the
// K'-sample window; deltas never do -- that is the truncation.
//
// Dropout is the inverted formulation: surviving units are scaled by
// 1/(1-p) during training and inference runs the full network untouched.
// Masks sit on the upward layer-to-layer hand-offs only, never on the
// recurrent path, and are redrawn at every weight update.
#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "harnn/dataset.hpp"
#include "harnn/evaluate.hpp"
#include "harnn/network.hpp"
#include "harnn/numeric.hpp"
#include "harnn/rng.hpp"

namespace harnn {

// Parameter-shaped gradient accumulator; same tensor layout as the
// network itself.
using Gradients = NetworkParams;

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t truncated_time = 30;  // T
  double clip_c = 5.0;
  double dropout_p = 0.5;
  std::size_t batch_size = 20;
  std::size_t window = 1200;  // K', samples drawn per trial per epoch
  std::size_t epochs = 80;
  AdamConfig adam;
  std::uint64_t seed = 1;
  std::size_t threads = 1;  // 1 is the deterministic reference mode

  void validate() const {
    require(truncated_time >= 1, "TrainConfig: truncated_time must be >= 1");
    require(clip_c > 0, "TrainConfig: clip threshold must be positive");
    require(dropout_p >= 0 && dropout_p < 1, "TrainConfig: dropout rate must be in [0,1)");
    require(batch_size > 0 && window > 0 && threads > 0, "TrainConfig: zero-sized setting");
  }
};

struct AdamState {
  Gradients m, v;
  std::uint64_t t = 0;
};

inline AdamState make_adam_state(const NetworkParams& params) {
  return {zero_like(params), zero_like(params), 0};
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0;  // mean cross entropy per time step, batch-averaged
  double train_acc = 0;
  double test_acc = 0;
  double seq_acc = 0;
  double seconds = 0;  // wall clock, the one non-deterministic column
};

// ---- flat views over the parameter structure -------------------------------

inline std::vector<std::span<double>> tensor_spans(NetworkParams& p) {
  std::vector<std::span<double>> out;
  out.reserve(p.layers.size() * 12 + 2);
  for (auto& l : p.layers) {
    for (GateParams* g : {&l.input, &l.forget, &l.candidate, &l.output}) {
      out.push_back(g->W.values);
      out.push_back(g->R.values);
      out.push_back(g->b);
    }
  }
  out.push_back(p.output.W.values);
  out.push_back(p.output.b);
  return out;
}

inline std::vector<std::span<const double>> tensor_spans(const NetworkParams& p) {
  const auto rw = tensor_spans(const_cast<NetworkParams&>(p));
  return {rw.begin(), rw.end()};
}

inline void zero_gradients(Gradients& g) {
  for (auto s : tensor_spans(g))
    for (double& x : s) x = 0.0;
}

inline void add_gradients(Gradients& acc, const Gradients& g) {
  auto a = tensor_spans(acc);
  auto b = tensor_spans(const_cast<Gradients&>(g));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
}

inline void scale_gradients(Gradients& g, double s) {
  for (auto sp : tensor_spans(g)) scale(sp, s);
}

inline double gradient_norm(const Gradients& g) {
  double ss = 0.0;
  for (auto sp : tensor_spans(const_cast<Gradients&>(g))) ss += sum_squares(sp);
  return std::sqrt(ss);
}

// ---- core updates -----------------------------------------------------------

/// Global-norm clipping: when ||g|| >= c the whole gradient is rescaled to
/// norm c; below the threshold it is untouched (bit-identical). Returns
/// the pre-clip norm.
inline double clip_gradients(Gradients& g, double c) {
  require(c > 0, "clip_gradients: threshold must be positive");
  const double norm = gradient_norm(g);
  if (norm >= c) scale_gradients(g, c / norm);
  return norm;
}

/// One Adam step on a flat parameter slice; shared by the network and the
/// baseline classifier.
inline void adam_step_span(std::span<double> w, std::span<const double> g, std::span<double> m,
                           std::span<double> v, std::uint64_t t, const AdamConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    w[i] -= cfg.alpha * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
  }
}

inline void adam_update(NetworkParams& params, const Gradients& g, AdamState& st,
                        const AdamConfig& cfg) {
  ++st.t;
  auto w = tensor_spans(params);
  auto gs = tensor_spans(const_cast<Gradients&>(g));
  auto ms = tensor_spans(st.m);
  auto vs = tensor_spans(st.v);
  for (std::size_t i = 0; i < w.size(); ++i) adam_step_span(w[i], gs[i], ms[i], vs[i], st.t, cfg);
}

/// Redraw dropout masks: each unit is zeroed with probability p, survivors
/// get 1/(1-p). p == 0 yields exact all-ones masks.
inline DropoutMasks sample_masks(double p, std::span<const std::size_t> widths, Rng& rng) {
  require(p >= 0 && p < 1, "sample_masks: rate must be in [0,1)");
  DropoutMasks masks;
  masks.layers.reserve(widths.size());
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t w : widths) {
    Vector m(w, 1.0);
    if (p > 0)
      for (double& x : m) x = rng.next_double() < p ? 0.0 : keep;
    masks.layers.push_back(std::move(m));
  }
  return masks;
}

// ---- truncated BPTT ---------------------------------------------------------

/// Forward over one truncation chunk recording traces, then the backward
/// pass. The target class supervises every step (segmented training
/// data). Gradients are ADDED into grad_acc; the carried state is updated
/// in place to the post-chunk values. Deltas stop at the oldest step of
/// the chunk: state_in enters as plain values, never as a gradient path.
/// Returns the summed cross entropy over the chunk.
inline double bptt_chunk(const NetworkParams& params, NetworkState& state,
                         std::span<const Vector> inputs, int target_class,
                         const DropoutMasks* masks, Gradients& grad_acc) {
  require(!inputs.empty(), "bptt_chunk: empty input range");
  const std::size_t num_layers = params.layers.size();
  const std::size_t classes = params.output.W.rows;
  require(target_class >= 0 && static_cast<std::size_t>(target_class) < classes,
          "bptt_chunk: target class out of range");

  const Vector target = one_hot(classes, static_cast<std::size_t>(target_class));
  std::vector<StepTrace> traces(inputs.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Vector y = forward_step(params, state, inputs[k], masks, &traces[k]);
    loss += cross_entropy(y, target);
  }

  // Recurrent delta carriers, consumed at step k, refilled for step k-1.
  std::vector<Vector> dh_rec(num_layers), dc_rec(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    dh_rec[l] = Vector(params.layers[l].units(), 0.0);
    dc_rec[l] = Vector(params.layers[l].units(), 0.0);
  }

  for (std::size_t k = inputs.size(); k-- > 0;) {
    const StepTrace& tr = traces[k];
    // Softmax + cross entropy collapse to y - d at the output pre-activation.
    Vector dv(classes);
    for (std::size_t h = 0; h < classes; ++h) dv[h] = tr.y[h] - target[h];
    add_outer(grad_acc.output.W, dv, tr.top);
    add_to(grad_acc.output.b, dv);
    Vector dz_above = mat_tvec(params.output.W, dv);  // grad wrt the (masked) top hand-off

    for (std::size_t l = num_layers; l-- > 0;) {
      const LayerTrace& lt = tr.layers[l];
      const LstmLayerParams& lp = params.layers[l];
      const std::size_t units = lp.units();

      Vector dh = std::move(dz_above);
      if (masks)
        for (std::size_t j = 0; j < units; ++j) dh[j] *= masks->layers[l][j];
      add_to(dh, dh_rec[l]);

      Vector da_i(units), da_f(units), da_g(units), da_o(units);
      for (std::size_t j = 0; j < units; ++j) {
        const double o = lt.go[j], tc = lt.tanh_c[j];
        da_o[j] = dh[j] * tc * o * (1.0 - o);
        const double dc = dh[j] * o * (1.0 - tc * tc) + dc_rec[l][j];
        da_i[j] = dc * lt.gg[j] * lt.gi[j] * (1.0 - lt.gi[j]);
        da_f[j] = dc * lt.c_prev[j] * lt.gf[j] * (1.0 - lt.gf[j]);
        da_g[j] = dc * lt.gi[j] * (1.0 - lt.gg[j] * lt.gg[j]);
        dc_rec[l][j] = dc * lt.gf[j];
      }

      LstmLayerParams& gl = grad_acc.layers[l];
      const Vector* das[] = {&da_i, &da_f, &da_g, &da_o};
      const GateParams* gp[] = {&lp.input, &lp.forget, &lp.candidate, &lp.output};
      GateParams* gg[] = {&gl.input, &gl.forget, &gl.candidate, &gl.output};
      Vector dh_prev(units, 0.0);
      for (int g = 0; g < 4; ++g) {
        add_outer(gg[g]->W, *das[g], lt.in);
        add_outer(gg[g]->R, *das[g], lt.h_prev);
        add_to(gg[g]->b, *das[g]);
        add_to(dh_prev, mat_tvec(gp[g]->R, *das[g]));
      }
      dh_rec[l] = std::move(dh_prev);

      if (l > 0) {
        Vector dx(lp.in_dim(), 0.0);
        for (int g = 0; g < 4; ++g) add_to(dx, mat_tvec(gp[g]->W, *das[g]));
        dz_above = std::move(dx);
      }
    }
  }
  // dh_rec / dc_rec for the step before the chunk are dropped here.
  return loss;
}

// ---- epoch loop -------------------------------------------------------------

struct EpochResult {
  double mean_loss = 0;      // per time step
  std::size_t updates = 0;   // weight updates performed
};

/// One pass over the training data following the mini-batch window
/// protocol: shuffle trials, make batches, per batch draw one random k,
/// walk the K'-window in T-sized ranges, and per range do
/// chunk -> average -> clip -> Adam. Training data must be segmented and
/// at least K' samples long.
inline EpochResult train_epoch(NetworkParams& params, AdamState& adam, const Dataset& train,
                               const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  require(!train.trials.empty(), "train_epoch: empty training dataset");
  for (const Trial& t : train.trials) {
    require(t.segmented(), "train_epoch: trial " + t.id + " is not segmented");
    require(t.samples.size() >= cfg.window,
            "train_epoch: trial " + t.id + " has " + std::to_string(t.samples.size()) +
                " samples, need >= " + std::to_string(cfg.window));
  }

  const auto batches = make_minibatches(train, cfg.batch_size, rng);
  std::vector<std::size_t> widths;
  for (const auto& l : params.layers) widths.push_back(l.units());

  Gradients batch_grad = zero_like(params);
  std::vector<Gradients> trial_grads;
  std::vector<double> trial_loss;
  double loss_sum = 0.0;
  std::size_t step_sum = 0, updates = 0;

  for (const auto& batch : batches) {
    const std::size_t members = batch.size();
    std::size_t min_len = train.trials[batch[0]].samples.size();
    for (std::size_t idx : batch) min_len = std::min(min_len, train.trials[idx].samples.size());
    const std::size_t k = rng.next_below(min_len - cfg.window + 1);

    std::vector<NetworkState> states;
    states.reserve(members);
    for (std::size_t i = 0; i < members; ++i) states.push_back(reset_state(params));
    while (trial_grads.size() < members) trial_grads.push_back(zero_like(params));
    trial_loss.assign(members, 0.0);

    for (std::size_t start = k; start < k + cfg.window; start += cfg.truncated_time) {
      const std::size_t len = std::min(cfg.truncated_time, k + cfg.window - start);
      DropoutMasks masks;
      const bool use_masks = cfg.dropout_p > 0;
      if (use_masks) masks = sample_masks(cfg.dropout_p, widths, rng);

      auto run_trial = [&](std::size_t i) {
        const Trial& trial = train.trials[batch[i]];
        const WindowSlice slice = slice_window(trial, start, len);
        zero_gradients(trial_grads[i]);
        trial_loss[i] = bptt_chunk(params, states[i], slice.inputs, *trial.label,
                                   use_masks ? &masks : nullptr, trial_grads[i]);
      };
      if (cfg.threads <= 1 || members < 2) {
        for (std::size_t i = 0; i < members; ++i) run_trial(i);
      } else {
        const std::size_t workers = std::min(cfg.threads, members);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            for (std::size_t i = w; i < members; i += workers) run_trial(i);
          });
        for (auto& th : pool) th.join();
      }

      // Fixed-order reduction keeps multi-threaded runs bit-identical.
      zero_gradients(batch_grad);
      double loss = 0.0;
      for (std::size_t i = 0; i < members; ++i) {
        add_gradients(batch_grad, trial_grads[i]);
        loss += trial_loss[i];
      }
      const double inv = 1.0 / static_cast<double>(members);
      scale_gradients(batch_grad, inv);
      loss *= inv;

      clip_gradients(batch_grad, cfg.clip_c);
      adam_update(params, batch_grad, adam, cfg.adam);
      loss_sum += loss;
      step_sum += len;
      ++updates;
    }
  }
  return {loss_sum / static_cast<double>(step_sum), updates};
}

// ---- full training ----------------------------------------------------------

struct TrainRun {
  NetworkParams params;
  AdamState adam;
  std::vector<EpochStats> log;
};

namespace detail {
inline double split_rate(const NetworkParams& params, const Dataset& ds, std::size_t threads) {
  if (ds.trials.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto preds = recognize_dataset(params, ds, threads);
  return dataset_rate(preds);
}
}  // namespace detail

/// Initialize from the seed, run the requested epochs, and after each one
/// evaluate the recognition rate on all three splits. Empty splits report
/// NaN in their column.
inline TrainRun train(const NetworkConfig& net_cfg, const TrainConfig& cfg,
                      const DatasetBundle& data, std::ostream* progress = nullptr) {
  cfg.validate();
  net_cfg.validate();
  Rng rng(cfg.seed);
  TrainRun run{init_network(net_cfg, rng), {}, {}};
  run.adam = make_adam_state(run.params);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochResult er = train_epoch(run.params, run.adam, data.train, cfg, rng);
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = er.mean_loss;
    st.train_acc = detail::split_rate(run.params, data.train, cfg.threads);
    st.test_acc = detail::split_rate(run.params, data.test, cfg.threads);
    st.seq_acc = detail::split_rate(run.params, data.sequence, cfg.threads);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.log.push_back(st);
    if (progress)
      (*progress) << "epoch " << epoch << "  loss " << st.train_loss << "  train "
                  << st.train_acc << "  test " << st.test_acc << "  seq " << st.seq_acc << "  ("
                  << st.seconds << " s)\n";
  }
  return run;
}

inline void write_stats_csv(const std::filesystem::path& path,
                            std::span<const EpochStats> log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_stats_csv: cannot open " + path.string());
  f << "epoch,train_loss,train_acc,test_acc,seq_acc,seconds\n";
  auto put = [&f](double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    f.write(buf, r.ptr - buf);
  };
  for (const EpochStats& st : log) {
    f << st.epoch << ',';
    put(st.train_loss);
    f << ',';
    put(st.train_acc);
    f << ',';
    put(st.test_acc);
    f << ',';
    put(st.seq_acc);
    f << ',';
    put(st.seconds);
    f << '\n';
  }
}

}  // namespace harnn
