#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sitsrnn/error.hpp"
#include "sitsrnn/numerics.hpp"

namespace sitsrnn {

// Weights of one gate: pre-activation = w_x * x_t + w_h * h_{t-1} + bias.
struct GateParams {
  Matrix w_x;  // H x D
  Matrix w_h;  // H x H
  Vector bias; // H

  friend bool operator==(const GateParams&, const GateParams&) = default;
};

// Peephole-free LSTM:
//   i = sigmoid(input gate)        f = sigmoid(forget gate)
//   y = tanh(candidate)            o = sigmoid(output gate)
//   c = i * y + f * c_prev         h = o * tanh(c)
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  GateParams input;
  GateParams forget;
  GateParams candidate;
  GateParams output;

  static LstmParams zeros(std::size_t d, std::size_t h) {
    LstmParams p;
    p.input_dim = d;
    p.hidden_dim = h;
    for (GateParams* g : {&p.input, &p.forget, &p.candidate, &p.output}) {
      *g = GateParams{Matrix(h, d), Matrix(h, h), Vector(h, 0.0)};
    }
    return p;
  }

  // Visits every tensor in the fixed serialization order:
  // input, forget, candidate, output; each as w_x, w_h, bias.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit(*this, fn);
  }

  friend bool operator==(const LstmParams&, const LstmParams&) = default;

 private:
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    auto gate = [&](auto& g, const char* name) {
      fn(std::string(name) + ".w_x", g.w_x.values());
      fn(std::string(name) + ".w_h", g.w_h.values());
      fn(std::string(name) + ".bias", std::span(g.bias));
    };
    gate(self.input, "lstm.input");
    gate(self.forget, "lstm.forget");
    gate(self.candidate, "lstm.candidate");
    gate(self.output, "lstm.output");
  }
};

// Gradients share the parameter layout.
using LstmGradients = LstmParams;

struct LstmState {
  Vector c;
  Vector h;

  static LstmState zeros(std::size_t h) { return {Vector(h, 0.0), Vector(h, 0.0)}; }
};

// Activations of one timestep, kept for the backward pass.
struct StepCache {
  Vector x, h_prev, c_prev;
  Vector i, f, y, o;
  Vector c, h;
};

struct SequenceOutput {
  LstmState final;
  std::vector<StepCache> caches;
};

struct SequenceGradients {
  LstmGradients params;
  std::vector<Vector> d_inputs;
};

// Glorot-uniform weights, zero biases except the forget gate bias at 1.
inline LstmParams init_params(std::size_t d, std::size_t h, std::uint64_t seed) {
  if (d == 0 || h == 0) throw InvalidArgument("lstm: init_params needs D >= 1 and H >= 1");
  LstmParams p = LstmParams::zeros(d, h);
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Matrix& m) {
    const double s = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-s, s);
    for (double& w : m.values()) w = dist(rng);
  };
  for (GateParams* g : {&p.input, &p.forget, &p.candidate, &p.output}) {
    glorot(g->w_x);
    glorot(g->w_h);
  }
  std::fill(p.forget.bias.begin(), p.forget.bias.end(), 1.0);
  return p;
}

namespace detail {

inline void check_lstm_shapes(const LstmParams& p) {
  const std::size_t d = p.input_dim, h = p.hidden_dim;
  for (const GateParams* g : {&p.input, &p.forget, &p.candidate, &p.output}) {
    if (g->w_x.rows() != h || g->w_x.cols() != d || g->w_h.rows() != h || g->w_h.cols() != h ||
        g->bias.size() != h) {
      throw ShapeError("lstm: parameter tensors inconsistent with D=" + std::to_string(d) +
                       ", H=" + std::to_string(h));
    }
  }
}

inline void gate_preactivation(const GateParams& g, std::span<const double> x,
                               std::span<const double> h_prev, Vector& out) {
  out.assign(g.bias.begin(), g.bias.end());
  gemv_accumulate(g.w_x, x, out);
  gemv_accumulate(g.w_h, h_prev, out);
}

// Forward step without shape validation; used on hot paths after a single
// up-front check.
inline void cell_step(std::span<const double> x, const Vector& c_prev, const Vector& h_prev,
                      const LstmParams& p, StepCache& cache) {
  const std::size_t h = p.hidden_dim;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  gate_preactivation(p.input, x, h_prev, cache.i);
  gate_preactivation(p.forget, x, h_prev, cache.f);
  gate_preactivation(p.candidate, x, h_prev, cache.y);
  gate_preactivation(p.output, x, h_prev, cache.o);
  cache.c.resize(h);
  cache.h.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    const double i = sigmoid(cache.i[k]);
    const double f = sigmoid(cache.f[k]);
    const double y = std::tanh(cache.y[k]);
    const double o = sigmoid(cache.o[k]);
    cache.i[k] = i;
    cache.f[k] = f;
    cache.y[k] = y;
    cache.o[k] = o;
    cache.c[k] = i * y + f * c_prev[k];
    cache.h[k] = o * std::tanh(cache.c[k]);
  }
}

}  // namespace detail

inline std::pair<LstmState, StepCache> cell_forward(std::span<const double> x,
                                                    const LstmState& prev, const LstmParams& p) {
  detail::check_lstm_shapes(p);
  if (x.size() != p.input_dim || prev.c.size() != p.hidden_dim || prev.h.size() != p.hidden_dim) {
    throw ShapeError("lstm: cell_forward got x of length " + std::to_string(x.size()) +
                     " and state of length " + std::to_string(prev.h.size()) + " for D=" +
                     std::to_string(p.input_dim) + ", H=" + std::to_string(p.hidden_dim));
  }
  StepCache cache;
  detail::cell_step(x, prev.c, prev.h, p, cache);
  LstmState next{cache.c, cache.h};
  return {std::move(next), std::move(cache)};
}

// Unrolls the cell over `steps` from the zero state. Any N >= 1 is accepted.
inline SequenceOutput sequence_forward(std::span<const Vector> steps, const LstmParams& p) {
  detail::check_lstm_shapes(p);
  if (steps.empty()) throw InvalidArgument("lstm: sequence_forward on empty sequence");
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (steps[t].size() != p.input_dim) {
      throw ShapeError("lstm: step " + std::to_string(t) + " has dimension " +
                       std::to_string(steps[t].size()) + ", expected D=" +
                       std::to_string(p.input_dim));
    }
  }
  SequenceOutput out;
  out.caches.resize(steps.size());
  const Vector zero(p.hidden_dim, 0.0);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const Vector& c_prev = t == 0 ? zero : out.caches[t - 1].c;
    const Vector& h_prev = t == 0 ? zero : out.caches[t - 1].h;
    detail::cell_step(steps[t], c_prev, h_prev, p, out.caches[t]);
  }
  out.final = LstmState{out.caches.back().c, out.caches.back().h};
  return out;
}

// Backpropagation through time. The loss depends on the sequence only through
// the final hidden state, whose gradient is d_h_final. Parameter gradients are
// added into `grads`; input gradients are written to `d_inputs` when given.
inline void accumulate_sequence_backward(std::span<const StepCache> caches, const LstmParams& p,
                                         std::span<const double> d_h_final, LstmGradients& grads,
                                         std::vector<Vector>* d_inputs = nullptr) {
  detail::check_lstm_shapes(p);
  detail::check_lstm_shapes(grads);
  const std::size_t h = p.hidden_dim, d = p.input_dim;
  if (grads.hidden_dim != h || grads.input_dim != d) {
    throw ShapeError("lstm: gradient accumulator shape differs from parameters");
  }
  if (d_h_final.size() != h) {
    throw ShapeError("lstm: d_h_final has length " + std::to_string(d_h_final.size()) +
                     ", expected H=" + std::to_string(h));
  }
  for (const auto& c : caches) {
    if (c.x.size() != d || c.h.size() != h || c.c.size() != h) {
      throw ShapeError("lstm: step cache does not match D=" + std::to_string(d) +
                       ", H=" + std::to_string(h));
    }
  }
  if (d_inputs) d_inputs->assign(caches.size(), Vector(d, 0.0));

  // Pass 1 walks backwards in time and stores the pre-activation deltas of
  // every gate. Pass 2 forms the weight gradients as sums over time, touching
  // each gradient row once per sequence instead of once per step.
  const std::size_t n = caches.size();
  const std::array<const GateParams*, 4> params{&p.input, &p.forget, &p.candidate, &p.output};
  const std::array<GateParams*, 4> grad_of{&grads.input, &grads.forget, &grads.candidate,
                                           &grads.output};
  // dz[g][t * h + k]
  std::array<Vector, 4> dz;
  for (auto& v : dz) v.assign(n * h, 0.0);
  Vector dh(d_h_final.begin(), d_h_final.end());
  Vector dc(h, 0.0);
  for (std::size_t step = n; step-- > 0;) {
    const StepCache& s = caches[step];
    double* dz_i = dz[0].data() + step * h;
    double* dz_f = dz[1].data() + step * h;
    double* dz_y = dz[2].data() + step * h;
    double* dz_o = dz[3].data() + step * h;
    for (std::size_t k = 0; k < h; ++k) {
      const double tc = std::tanh(s.c[k]);
      const double d_o = dh[k] * tc;
      dc[k] += dh[k] * s.o[k] * (1.0 - tc * tc);
      const double d_i = dc[k] * s.y[k];
      const double d_y = dc[k] * s.i[k];
      const double d_f = dc[k] * s.c_prev[k];
      dz_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
      dz_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
      dz_y[k] = d_y * (1.0 - s.y[k] * s.y[k]);
      dz_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
      dc[k] *= s.f[k];  // now d c_{t-1}
    }
    if (step == 0 && !d_inputs) break;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t g = 0; g < 4; ++g) {
      const std::span<const double> dz_step(dz[g].data() + step * h, h);
      if (step > 0) detail::gemv_transposed_accumulate(params[g]->w_h, dz_step, dh);
      if (d_inputs) detail::gemv_transposed_accumulate(params[g]->w_x, dz_step, (*d_inputs)[step]);
    }
  }

  for (std::size_t g = 0; g < 4; ++g) {
    GateParams& grad = *grad_of[g];
    for (std::size_t k = 0; k < h; ++k) {
      auto row_x = grad.w_x.row(k);
      auto row_h = grad.w_h.row(k);
      double db = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double delta = dz[g][t * h + k];
        db += delta;
        axpy(delta, caches[t].x, row_x);
        axpy(delta, caches[t].h_prev, row_h);
      }
      grad.bias[k] += db;
    }
  }
}

inline SequenceGradients sequence_backward(std::span<const StepCache> caches, const LstmParams& p,
                                           std::span<const double> d_h_final) {
  if (caches.empty()) throw InvalidArgument("lstm: sequence_backward needs at least one cache");
  SequenceGradients out{LstmParams::zeros(p.input_dim, p.hidden_dim), {}};
  accumulate_sequence_backward(caches, p, d_h_final, out.params, &out.d_inputs);
  return out;
}

}  // namespace sitsrnn
