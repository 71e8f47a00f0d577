#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitsrnn/data.hpp"
#include "sitsrnn/error.hpp"
#include "sitsrnn/lstm.hpp"
#include "sitsrnn/numerics.hpp"
#include "sitsrnn/parallel.hpp"

namespace sitsrnn {

// Softmax classification head on the last hidden state.
struct SoftmaxParams {
  Matrix weights;  // K x H
  Vector bias;     // K

  friend bool operator==(const SoftmaxParams&, const SoftmaxParams&) = default;
};

struct ModelParams {
  LstmParams lstm;
  SoftmaxParams head;
  std::vector<std::string> class_names;
  // Input scaling fitted on the training split; applied by the CLI before
  // inference. Not a trainable tensor.
  std::optional<Normalizer> normalizer;

  std::size_t num_classes() const noexcept { return head.bias.size(); }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    lstm.for_each_tensor(fn);
    fn(std::string("head.weights"), head.weights.values());
    fn(std::string("head.bias"), std::span(head.bias));
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    lstm.for_each_tensor(fn);
    fn(std::string("head.weights"), head.weights.values());
    fn(std::string("head.bias"), std::span(head.bias));
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Same tensor layout as the trainable part of ModelParams.
struct ModelGradients {
  LstmGradients lstm;
  SoftmaxParams head;

  static ModelGradients zeros_like(const ModelParams& p) {
    return {LstmParams::zeros(p.lstm.input_dim, p.lstm.hidden_dim),
            SoftmaxParams{Matrix(p.head.weights.rows(), p.head.weights.cols()),
                          Vector(p.head.bias.size(), 0.0)}};
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    lstm.for_each_tensor(fn);
    fn(std::string("head.weights"), head.weights.values());
    fn(std::string("head.bias"), std::span(head.bias));
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    lstm.for_each_tensor(fn);
    fn(std::string("head.weights"), head.weights.values());
    fn(std::string("head.bias"), std::span(head.bias));
  }

  void set_zero() {
    for_each_tensor([](const std::string&, std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
  }
};

enum class DecaySchedule { per_update, per_epoch };

struct TrainConfig {
  std::size_t hidden_dim = 512;
  double learning_rate = 5e-4;
  double lr_decay = 5e-5;
  DecaySchedule decay_schedule = DecaySchedule::per_update;
  std::size_t epochs = 200;
  std::size_t batch_size = 20;
  double rmsprop_rho = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> grad_clip_norm;
  // Worker threads for per-sample gradients. Results do not depend on it.
  std::size_t threads = 1;

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (hidden_dim < 1) throw InvalidArgument("model: hidden_dim must be >= 1");
    if (epochs < 1) throw InvalidArgument("model: epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("model: batch_size must be >= 1");
    if (!positive(learning_rate)) throw InvalidArgument("model: learning_rate must be > 0");
    if (!(std::isfinite(lr_decay) && lr_decay >= 0.0)) {
      throw InvalidArgument("model: lr_decay must be >= 0");
    }
    if (!(rmsprop_rho > 0.0 && rmsprop_rho < 1.0)) {
      throw InvalidArgument("model: rmsprop_rho must lie in (0, 1)");
    }
    if (!positive(rmsprop_epsilon)) throw InvalidArgument("model: rmsprop_epsilon must be > 0");
    if (grad_clip_norm && !positive(*grad_clip_norm)) {
      throw InvalidArgument("model: grad_clip_norm must be > 0");
    }
  }
};

struct RmspropState {
  ModelGradients mean_square;
  std::uint64_t update_count = 0;
  std::uint64_t epoch_count = 0;

  static RmspropState zeros_like(const ModelParams& p) {
    return {ModelGradients::zeros_like(p), 0, 0};
  }
};

struct ModelForward {
  Vector logits;
  Vector probs;
  double loss = 0.0;
  std::vector<StepCache> caches;
};

struct Prediction {
  std::size_t label = 0;
  Vector probs;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

inline ModelParams init_model(std::size_t input_dim, std::size_t hidden_dim,
                              std::vector<std::string> class_names, std::uint64_t seed) {
  if (class_names.size() < 2) throw InvalidArgument("model: need at least 2 classes");
  ModelParams p;
  p.lstm = init_params(input_dim, hidden_dim, derive_seed(seed, 11));
  const std::size_t k = class_names.size();
  p.head.weights = Matrix(k, hidden_dim);
  p.head.bias.assign(k, 0.0);
  std::mt19937_64 rng(derive_seed(seed, 12));
  const double s = std::sqrt(6.0 / static_cast<double>(k + hidden_dim));
  std::uniform_real_distribution<double> dist(-s, s);
  for (double& w : p.head.weights.values()) w = dist(rng);
  p.class_names = std::move(class_names);
  return p;
}

namespace detail {

inline void check_model_shapes(const ModelParams& p) {
  check_lstm_shapes(p.lstm);
  const std::size_t k = p.head.bias.size();
  if (p.head.weights.rows() != k || p.head.weights.cols() != p.lstm.hidden_dim) {
    throw ShapeError("model: head weights are " + shape_str(p.head.weights.rows(), p.head.weights.cols()) +
                     ", expected " + shape_str(k, p.lstm.hidden_dim));
  }
  if (k < 2 || p.class_names.size() != k) {
    throw ShapeError("model: head has " + std::to_string(k) + " outputs for " +
                     std::to_string(p.class_names.size()) + " class names");
  }
}

inline void check_sample(const TimeSeriesSample& s, const ModelParams& p) {
  if (s.steps.empty()) throw InvalidArgument("model: sample '" + s.id + "' has no timesteps");
  for (const auto& step : s.steps) {
    if (step.size() != p.lstm.input_dim) {
      throw ShapeError("model: sample '" + s.id + "' has D=" + std::to_string(step.size()) +
                       " but the model expects D=" + std::to_string(p.lstm.input_dim));
    }
  }
}

inline ModelForward forward_unchecked(const TimeSeriesSample& s, const ModelParams& p) {
  ModelForward out;
  auto seq = sequence_forward(s.steps, p.lstm);
  out.logits = affine(p.head.weights, seq.final.h, p.head.bias);
  out.probs = stable_softmax(out.logits);
  out.caches = std::move(seq.caches);
  if (s.label < out.logits.size()) {
    // -log softmax via log-sum-exp so saturated logits give a finite loss.
    const double m = *std::max_element(out.logits.begin(), out.logits.end());
    double sum = 0.0;
    for (double z : out.logits) sum += std::exp(z - m);
    out.loss = m + std::log(sum) - out.logits[s.label];
  }
  return out;
}

}  // namespace detail

inline ModelForward model_forward(const TimeSeriesSample& s, const ModelParams& p) {
  detail::check_model_shapes(p);
  detail::check_sample(s, p);
  if (s.label >= p.num_classes()) {
    throw InvalidArgument("model: label " + std::to_string(s.label) + " out of range for " +
                          std::to_string(p.num_classes()) + " classes");
  }
  return detail::forward_unchecked(s, p);
}

// d loss / d logits for softmax + cross-entropy: probs - onehot(label).
inline Vector softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw InvalidArgument("model: label out of range");
  Vector d(probs.begin(), probs.end());
  d[label] -= 1.0;
  return d;
}

inline void accumulate_model_backward(const ModelForward& fwd, const ModelParams& p,
                                      std::size_t label, ModelGradients& grads) {
  if (fwd.caches.empty()) throw InvalidArgument("model: backward without forward caches");
  const Vector d_logits = softmax_cross_entropy_grad(fwd.probs, label);
  const Vector& h_last = fwd.caches.back().h;
  if (h_last.size() != p.lstm.hidden_dim || d_logits.size() != p.num_classes()) {
    throw ShapeError("model: caches do not match the model (H=" + std::to_string(h_last.size()) +
                     " vs " + std::to_string(p.lstm.hidden_dim) + ")");
  }
  detail::outer_accumulate(d_logits, h_last, grads.head.weights);
  axpy(1.0, d_logits, grads.head.bias);
  Vector d_h(p.lstm.hidden_dim, 0.0);
  detail::gemv_transposed_accumulate(p.head.weights, d_logits, d_h);
  accumulate_sequence_backward(fwd.caches, p.lstm, d_h, grads.lstm);
}

inline ModelGradients model_backward(const ModelForward& fwd, const ModelParams& p,
                                     std::size_t label) {
  auto grads = ModelGradients::zeros_like(p);
  accumulate_model_backward(fwd, p, label, grads);
  return grads;
}

namespace detail {

template <typename T>
std::vector<std::span<double>> mutable_tensors(T& t) {
  std::vector<std::span<double>> out;
  t.for_each_tensor([&](const std::string&, std::span<double> s) { out.push_back(s); });
  return out;
}

template <typename T>
std::vector<std::pair<std::string, std::span<const double>>> named_tensors(const T& t) {
  std::vector<std::pair<std::string, std::span<const double>>> out;
  t.for_each_tensor([&](const std::string& name, std::span<const double> s) {
    out.emplace_back(name, s);
  });
  return out;
}

// The spans point into `t`; a temporary would leave them dangling.
template <typename T>
void named_tensors(const T&&) = delete;

}  // namespace detail

inline double learning_rate_at(const TrainConfig& cfg, const RmspropState& state) {
  const auto count = cfg.decay_schedule == DecaySchedule::per_update ? state.update_count
                                                                      : state.epoch_count;
  return cfg.learning_rate / (1.0 + cfg.lr_decay * static_cast<double>(count));
}

// s <- rho*s + (1-rho)*g^2;  theta <- theta - lr_t * g / (sqrt(s) + eps)
// with lr_t = lr / (1 + decay * count). Rejects non-finite gradients before
// touching any parameter.
inline void rmsprop_update(ModelParams& params, const ModelGradients& grads, RmspropState& state,
                           const TrainConfig& cfg) {
  const auto g = detail::named_tensors(grads);
  auto theta = detail::mutable_tensors(params);
  auto s = detail::mutable_tensors(state.mean_square);
  if (g.size() != theta.size() || g.size() != s.size()) {
    throw ShapeError("model: optimizer tensor count mismatch");
  }
  for (std::size_t t = 0; t < g.size(); ++t) {
    if (g[t].second.size() != theta[t].size() || s[t].size() != theta[t].size()) {
      throw ShapeError("model: optimizer shape mismatch in " + g[t].first);
    }
    for (std::size_t j = 0; j < g[t].second.size(); ++j) {
      if (!std::isfinite(g[t].second[j])) {
        throw InvalidArgument("model: non-finite gradient in " + g[t].first + " at entry " +
                              std::to_string(j));
      }
    }
  }
  const double lr = learning_rate_at(cfg, state);
  const double rho = cfg.rmsprop_rho, eps = cfg.rmsprop_epsilon;
  for (std::size_t t = 0; t < g.size(); ++t) {
    const auto grad = g[t].second;
    auto acc = s[t];
    auto w = theta[t];
    for (std::size_t j = 0; j < grad.size(); ++j) {
      acc[j] = rho * acc[j] + (1.0 - rho) * grad[j] * grad[j];
      w[j] -= lr * grad[j] / (std::sqrt(acc[j]) + eps);
    }
  }
  ++state.update_count;
}

inline double global_norm(const ModelGradients& g) {
  double sq = 0.0;
  g.for_each_tensor([&](const std::string&, std::span<const double> t) {
    for (double v : t) sq += v * v;
  });
  return std::sqrt(sq);
}

// Mini-batch RMSprop on mean cross-entropy. Fully determined by cfg.seed; the
// thread count only changes who computes each per-sample gradient, while the
// batch sum always runs in sample order.
inline TrainResult train(const Dataset& train_set, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  train_set.require_trainable("model");
  train_set.validate();

  TrainResult result;
  result.params = init_model(train_set.num_features, cfg.hidden_dim, train_set.class_names, cfg.seed);
  ModelParams& params = result.params;
  auto state = RmspropState::zeros_like(params);

  const std::size_t n = train_set.size();
  const std::size_t slots = std::min(cfg.batch_size, n);
  std::vector<ModelGradients> sample_grads(slots, ModelGradients::zeros_like(params));
  std::vector<double> sample_loss(slots, 0.0);
  auto batch_grad = ModelGradients::zeros_like(params);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 13));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      parallel_for(b, cfg.threads, [&](std::size_t j) {
        const auto& sample = train_set.samples[order[start + j]];
        sample_grads[j].set_zero();
        const auto fwd = detail::forward_unchecked(sample, params);
        sample_loss[j] = fwd.loss;
        accumulate_model_backward(fwd, params, sample.label, sample_grads[j]);
      });
      batch_grad.set_zero();
      auto acc = detail::mutable_tensors(batch_grad);
      for (std::size_t j = 0; j < b; ++j) {
        epoch_loss += sample_loss[j];
        std::size_t t = 0;
        sample_grads[j].for_each_tensor([&](const std::string&, std::span<const double> g) {
          axpy(1.0, g, acc[t++]);
        });
      }
      double scale = 1.0 / static_cast<double>(b);
      if (cfg.grad_clip_norm) {
        const double norm = global_norm(batch_grad) * scale;
        if (norm > *cfg.grad_clip_norm) scale *= *cfg.grad_clip_norm / norm;
      }
      for (auto t : acc) {
        for (double& v : t) v *= scale;
      }
      rmsprop_update(params, batch_grad, state, cfg);
    }
    ++state.epoch_count;
    const double mean_loss = epoch_loss / static_cast<double>(n);
    result.loss_history.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  return result;
}

// Argmax of the softmax distribution, ties to the lowest class index.
inline std::vector<Prediction> predict(const Dataset& ds, const ModelParams& p,
                                       std::size_t threads = 1) {
  detail::check_model_shapes(p);
  for (const auto& s : ds.samples) detail::check_sample(s, p);
  std::vector<Prediction> out(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    auto fwd = detail::forward_unchecked(ds.samples[i], p);
    out[i].label = argmax(fwd.probs);
    out[i].probs = std::move(fwd.probs);
  });
  return out;
}

// Last hidden state of every sample, one row per sample.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  std::vector<Vector> rows;
  std::vector<std::string> class_names;

  std::size_t dim() const noexcept { return rows.empty() ? 0 : rows.front().size(); }

  // The table as a T=1 dataset so it can be written with save_dataset and
  // read back with load_dataset.
  Dataset to_dataset() const {
    Dataset ds;
    ds.num_timestamps = 1;
    ds.num_features = dim();
    ds.class_names = class_names;
    ds.provenance.source = "lstm-features";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ds.samples.push_back({ids[i], labels[i], {rows[i]}});
    }
    return ds;
  }
};

inline FeatureTable extract_features(const Dataset& ds, const ModelParams& p,
                                     std::size_t threads = 1) {
  detail::check_model_shapes(p);
  for (const auto& s : ds.samples) detail::check_sample(s, p);
  FeatureTable table;
  table.class_names = ds.class_names;
  table.rows.resize(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    table.rows[i] = sequence_forward(ds.samples[i].steps, p.lstm).final.h;
  });
  for (const auto& s : ds.samples) {
    table.ids.push_back(s.id);
    table.labels.push_back(s.label);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Model container. Little-endian throughout:
//
//   "SITSRNN1"                      8-byte magic
//   u32 version                     currently 1
//   u64 D, H, K, T_hint             T_hint = normalizer T, or 0 without one
//   u8  has_normalizer
//   K x (u32 length, bytes)         class-name table
//   f64 tensors                     lstm.{input,forget,candidate,output}.{w_x,w_h,bias},
//                                   head.weights (K x H), head.bias (K)
//   f64 normalizer                  mean (T x D) then stddev (T x D), if present

inline constexpr std::string_view kModelMagic = "SITSRNN1";
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  template <typename UInt>
  void uint(UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename UInt>
  UInt uint() {
    need(sizeof(UInt));
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(UInt);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  void f64s(std::span<double> out) {
    for (double& x : out) x = f64();
  }
  std::size_t position() const noexcept { return pos_; }
  std::size_t size() const noexcept { return data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw FormatError("model: truncated file: expected at least " + std::to_string(pos_ + n) +
                        " bytes, got " + std::to_string(data_.size()));
    }
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::optional<std::uint64_t> checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::nullopt;
  return a * b;
}

}  // namespace detail

inline std::string serialize_model(const ModelParams& p) {
  detail::check_model_shapes(p);
  const std::uint64_t t_hint = p.normalizer ? p.normalizer->num_timestamps() : 0;
  if (p.normalizer && p.normalizer->num_features() != p.lstm.input_dim) {
    throw ShapeError("model: normalizer D does not match the model input dimension");
  }
  detail::ByteWriter w;
  w.bytes(kModelMagic);
  w.uint<std::uint32_t>(kModelVersion);
  w.uint<std::uint64_t>(p.lstm.input_dim);
  w.uint<std::uint64_t>(p.lstm.hidden_dim);
  w.uint<std::uint64_t>(p.num_classes());
  w.uint<std::uint64_t>(t_hint);
  w.uint<std::uint8_t>(p.normalizer ? 1 : 0);
  for (const auto& name : p.class_names) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
  }
  p.for_each_tensor([&](const std::string&, std::span<const double> t) { w.f64s(t); });
  if (p.normalizer) {
    w.f64s(p.normalizer->mean.values());
    w.f64s(p.normalizer->stddev.values());
  }
  return w.take();
}

inline ModelParams deserialize_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kModelMagic.size() || r.bytes(kModelMagic.size()) != kModelMagic) {
    throw FormatError("model: bad magic, not a model file");
  }
  const auto version = r.uint<std::uint32_t>();
  if (version != kModelVersion) {
    throw FormatError("model: unsupported model version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kModelVersion) + ")");
  }
  const auto d = r.uint<std::uint64_t>();
  const auto h = r.uint<std::uint64_t>();
  const auto k = r.uint<std::uint64_t>();
  const auto t_hint = r.uint<std::uint64_t>();
  const auto has_norm = r.uint<std::uint8_t>();
  if (d == 0 || h == 0 || k < 2 || has_norm > 1 || (has_norm == 1) != (t_hint > 0)) {
    throw FormatError("model: inconsistent header (D=" + std::to_string(d) + ", H=" +
                      std::to_string(h) + ", K=" + std::to_string(k) + ")");
  }
  if (k > r.size()) throw FormatError("model: class count exceeds file size");
  std::vector<std::string> names;
  for (std::uint64_t c = 0; c < k; ++c) {
    const auto len = r.uint<std::uint32_t>();
    names.emplace_back(r.bytes(len));
  }

  // Payload size from the header, checked before allocating anything.
  auto lstm_count = detail::checked_mul(h, d + h + 1);
  auto lstm_total = lstm_count ? detail::checked_mul(*lstm_count, 4) : std::nullopt;
  auto head_total = detail::checked_mul(k, h + 1);
  auto norm_total = detail::checked_mul(t_hint, d);
  if (!lstm_total || !head_total || !norm_total) throw FormatError("model: header sizes overflow");
  const std::uint64_t doubles = *lstm_total + *head_total + 2 * *norm_total;
  auto payload = detail::checked_mul(doubles, 8);
  if (!payload || *payload > std::numeric_limits<std::uint64_t>::max() - r.position()) {
    throw FormatError("model: header sizes overflow");
  }
  const std::uint64_t expected = r.position() + *payload;
  if (bytes.size() != expected) {
    throw FormatError(std::string("model: ") +
                      (bytes.size() < expected ? "truncated payload" : "trailing bytes after payload") +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }

  ModelParams p;
  p.lstm = LstmParams::zeros(d, h);
  p.head.weights = Matrix(k, h);
  p.head.bias.assign(k, 0.0);
  p.class_names = std::move(names);
  p.for_each_tensor([&](const std::string&, std::span<double> t) { r.f64s(t); });
  if (has_norm) {
    Normalizer n{Matrix(t_hint, d), Matrix(t_hint, d)};
    r.f64s(n.mean.values());
    r.f64s(n.stddev.values());
    p.normalizer = std::move(n);
  }
  return p;
}

inline void save_model(const ModelParams& p, const std::string& path) {
  write_text_file(path, serialize_model(p));
}

inline ModelParams load_model(const std::string& path) {
  return deserialize_model(detail::read_text_file(path, "model"));
}

}  // namespace sitsrnn
