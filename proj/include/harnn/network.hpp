// The network model: stacked LSTM internal layers with recurrent
// connections and a softmax output layer, stepped one input sample at a
// time.
//
// Per layer and time step, with x the layer input, h/c the carried
// hidden and cell values and sigma the logistic function:
//
//   i = sigma(W_i x + R_i h + b_i)        input gate
//   f = sigma(W_f x + R_f h + b_f)        forget gate
//   g = tanh (W_g x + R_g h + b_g)        cell candidate
//   o = sigma(W_o x + R_o h + b_o)        output gate
//   c' = f.c + i.g
//   h' = o.tanh(c')
//
// No peephole connections. The output layer is a plain affine map of the
// top hidden vector followed by softmax; it has no recurrent weights.
//
// Scalar accounting for the default 3-input / 3x60-LSTM / 6-class model:
//   per layer      4*(J*I + J*J + J)   gate input, recurrent and bias weights
//   output layer   H*J + H
//   carried state  2*J*L               one h and one c value per unit
// which gives 73,806 trainable weights plus 360 state values, 74,166
// scalars held end to end. count_trainable_scalars / count_total_scalars
// implement exactly this and are asserted in the test suite.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "harnn/matrix.hpp"
#include "harnn/numeric.hpp"
#include "harnn/rng.hpp"

namespace harnn {

struct NetworkConfig {
  std::size_t input_dim = 3;
  std::size_t internal_layers = 3;
  std::size_t units = 60;
  std::size_t classes = 6;

  void validate() const {
    require(input_dim > 0 && internal_layers > 0 && units > 0 && classes > 0,
            "NetworkConfig: all dimensions must be positive");
  }
};

struct GateParams {
  Matrix W;  // J x I input weights
  Matrix R;  // J x J recurrent weights
  Vector b;  // J bias
};

struct LstmLayerParams {
  GateParams input, forget, candidate, output;

  std::size_t units() const { return input.W.rows; }
  std::size_t in_dim() const { return input.W.cols; }
};

struct OutputLayerParams {
  Matrix W;  // H x J
  Vector b;  // H
};

struct NetworkParams {
  std::vector<LstmLayerParams> layers;
  OutputLayerParams output;

  NetworkConfig config() const {
    return {layers.front().in_dim(), layers.size(), layers.front().units(), output.W.rows};
  }
};

// Hidden and cell values carried across time, one pair per internal layer.
// Single-owner: one state per input stream.
struct NetworkState {
  std::vector<Vector> h;
  std::vector<Vector> c;
};

// Dropout masks, one per internal layer, applied to the hidden vector on
// its way up to the next layer (never on the recurrent path). Entries are
// 0 or 1/(1-p).
struct DropoutMasks {
  std::vector<Vector> layers;
};

// Everything the backward pass needs about one layer at one time step.
struct LayerTrace {
  Vector in;              // layer input as fed (post-mask)
  Vector h_prev, c_prev;  // carried state before the step
  Vector gi, gf, gg, go;  // post-activation gate values
  Vector c;               // new cell state
  Vector tanh_c;
};

struct StepTrace {
  std::vector<LayerTrace> layers;
  Vector top;  // input handed to the output layer (post-mask)
  Vector y;    // softmax output
};

// ---- parameter traversal ------------------------------------------------
//
// Fixed order: layers ascending, gates in (input, forget, candidate,
// output), W then R then b per gate, then output.W, output.b. Weight
// initialization, gradient flattening and the model file manifest all use
// this order.

struct TensorRef {
  std::string name;
  std::size_t rows, cols;  // cols == 0 marks a vector
  std::span<double> data;
};

namespace detail {
inline void collect(NetworkParams& p, std::vector<TensorRef>& out) {
  static constexpr const char* kGateNames[] = {"input", "forget", "candidate", "output"};
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    GateParams* gates[] = {&p.layers[l].input, &p.layers[l].forget, &p.layers[l].candidate,
                           &p.layers[l].output};
    for (int g = 0; g < 4; ++g) {
      const std::string base = "layer" + std::to_string(l) + "." + kGateNames[g] + ".";
      out.push_back({base + "W", gates[g]->W.rows, gates[g]->W.cols, gates[g]->W.values});
      out.push_back({base + "R", gates[g]->R.rows, gates[g]->R.cols, gates[g]->R.values});
      out.push_back({base + "b", gates[g]->b.size(), 0, gates[g]->b});
    }
  }
  out.push_back({"output.W", p.output.W.rows, p.output.W.cols, p.output.W.values});
  out.push_back({"output.b", p.output.b.size(), 0, p.output.b});
}
}  // namespace detail

inline std::vector<TensorRef> tensor_refs(NetworkParams& p) {
  std::vector<TensorRef> out;
  out.reserve(p.layers.size() * 12 + 2);
  detail::collect(p, out);
  return out;
}

inline std::vector<TensorRef> tensor_refs(const NetworkParams& p) {
  return tensor_refs(const_cast<NetworkParams&>(p));
}

// ---- scalar accounting ---------------------------------------------------

inline std::size_t count_trainable_scalars(const NetworkConfig& cfg) {
  std::size_t total = 0;
  std::size_t in = cfg.input_dim;
  for (std::size_t l = 0; l < cfg.internal_layers; ++l) {
    total += 4 * (cfg.units * in + cfg.units * cfg.units + cfg.units);
    in = cfg.units;
  }
  total += cfg.classes * cfg.units + cfg.classes;
  return total;
}

inline std::size_t count_state_scalars(const NetworkConfig& cfg) {
  return 2 * cfg.units * cfg.internal_layers;
}

/// Trainable weights plus the carried h/c values; 74,166 for the default
/// 3 / 3x60 / 6 configuration.
inline std::size_t count_total_scalars(const NetworkConfig& cfg) {
  return count_trainable_scalars(cfg) + count_state_scalars(cfg);
}

// ---- construction ----------------------------------------------------------

/// All W and R entries uniform in [-0.1, 0.1), biases zero. Draw order is
/// the traversal order above, so a seed pins every weight.
inline NetworkParams init_network(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParams p;
  std::size_t in = cfg.input_dim;
  for (std::size_t l = 0; l < cfg.internal_layers; ++l) {
    LstmLayerParams layer;
    for (GateParams* g : {&layer.input, &layer.forget, &layer.candidate, &layer.output}) {
      g->W = uniform_init(rng, cfg.units, in);
      g->R = uniform_init(rng, cfg.units, cfg.units);
      g->b = Vector(cfg.units, 0.0);
    }
    p.layers.push_back(std::move(layer));
    in = cfg.units;
  }
  p.output.W = uniform_init(rng, cfg.classes, cfg.units);
  p.output.b = Vector(cfg.classes, 0.0);
  return p;
}

inline NetworkParams zero_like(const NetworkParams& src) {
  NetworkParams p;
  p.layers.reserve(src.layers.size());
  for (const auto& l : src.layers) {
    LstmLayerParams z;
    const GateParams* from[] = {&l.input, &l.forget, &l.candidate, &l.output};
    GateParams* to[] = {&z.input, &z.forget, &z.candidate, &z.output};
    for (int g = 0; g < 4; ++g) {
      to[g]->W = Matrix(from[g]->W.rows, from[g]->W.cols);
      to[g]->R = Matrix(from[g]->R.rows, from[g]->R.cols);
      to[g]->b = Vector(from[g]->b.size(), 0.0);
    }
    p.layers.push_back(std::move(z));
  }
  p.output.W = Matrix(src.output.W.rows, src.output.W.cols);
  p.output.b = Vector(src.output.b.size(), 0.0);
  return p;
}

inline NetworkState reset_state(const NetworkParams& p) {
  NetworkState s;
  s.h.reserve(p.layers.size());
  s.c.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    s.h.emplace_back(l.units(), 0.0);
    s.c.emplace_back(l.units(), 0.0);
  }
  return s;
}

// ---- forward propagation ---------------------------------------------------

/// One LSTM cell step. h and c are written in place; when trace is given
/// it receives everything the backward pass needs.
inline void lstm_cell_step(const LstmLayerParams& p, const Vector& x, Vector& h, Vector& c,
                           LayerTrace* trace = nullptr) {
  require(x.size() == p.in_dim() && h.size() == p.units() && c.size() == p.units(),
          "lstm_cell_step: shape mismatch");
  Vector ai = mat_vec(p.input.W, x);
  Vector af = mat_vec(p.forget.W, x);
  Vector ag = mat_vec(p.candidate.W, x);
  Vector ao = mat_vec(p.output.W, x);
  add_to(ai, mat_vec(p.input.R, h));
  add_to(af, mat_vec(p.forget.R, h));
  add_to(ag, mat_vec(p.candidate.R, h));
  add_to(ao, mat_vec(p.output.R, h));
  const std::size_t n = p.units();
  if (trace) {
    trace->in = x;
    trace->h_prev = h;
    trace->c_prev = c;
    trace->gi.resize(n);
    trace->gf.resize(n);
    trace->gg.resize(n);
    trace->go.resize(n);
    trace->tanh_c.resize(n);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double i = logistic(ai[j] + p.input.b[j]);
    const double f = logistic(af[j] + p.forget.b[j]);
    const double g = std::tanh(ag[j] + p.candidate.b[j]);
    const double o = logistic(ao[j] + p.output.b[j]);
    const double cj = f * c[j] + i * g;
    const double tc = std::tanh(cj);
    if (trace) {
      trace->gi[j] = i;
      trace->gf[j] = f;
      trace->gg[j] = g;
      trace->go[j] = o;
      trace->tanh_c[j] = tc;
    }
    c[j] = cj;
    h[j] = o * tc;
  }
  if (trace) trace->c = c;
}

/// One full forward step: chains the internal layers bottom to top,
/// applies dropout masks on the upward hand-offs when given, and finishes
/// with the softmax output layer. Updates state in place.
inline Vector forward_step(const NetworkParams& p, NetworkState& state, const Vector& x,
                           const DropoutMasks* masks = nullptr, StepTrace* trace = nullptr) {
  require(x.size() == p.layers.front().in_dim(), "forward_step: input dimension mismatch");
  if (masks) require(masks->layers.size() == p.layers.size(), "forward_step: mask count mismatch");
  if (trace) trace->layers.resize(p.layers.size());
  Vector z = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    lstm_cell_step(p.layers[l], z, state.h[l], state.c[l],
                   trace ? &trace->layers[l] : nullptr);
    z = state.h[l];
    if (masks) {
      require(masks->layers[l].size() == z.size(), "forward_step: mask width mismatch");
      for (std::size_t j = 0; j < z.size(); ++j) z[j] *= masks->layers[l][j];
    }
  }
  Vector v = mat_vec(p.output.W, z);
  for (std::size_t h = 0; h < v.size(); ++h) v[h] += p.output.b[h];
  Vector y = softmax(v);
  if (trace) {
    trace->top = std::move(z);
    trace->y = y;
  }
  return y;
}

/// argmax with ties broken toward the lowest index
inline std::size_t predict_class(const Vector& y) {
  require(!y.empty(), "predict_class: empty vector");
  std::size_t best = 0;
  for (std::size_t h = 1; h < y.size(); ++h)
    if (y[h] > y[best]) best = h;
  return best;
}

}  // namespace harnn
