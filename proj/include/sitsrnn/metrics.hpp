#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sitsrnn/error.hpp"

namespace sitsrnn {

// k disjoint folds of sample indices, each sorted ascending.
struct FoldAssignment {
  std::vector<std::vector<std::size_t>> folds;

  std::size_t size() const noexcept { return folds.size(); }

  // Indices outside fold `f`, ascending.
  std::vector<std::size_t> train_indices(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Per class: seeded shuffle, then deal round-robin. Each class continues
// dealing from the fold after the one where the previous class stopped, which
// keeps total fold sizes within one sample of each other as well.
inline FoldAssignment stratified_kfold(std::span<const std::size_t> labels, std::size_t k,
                                       std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("eval: k must be >= 2");
  if (k > labels.size()) {
    throw InvalidArgument("eval: k=" + std::to_string(k) + " exceeds the " +
                          std::to_string(labels.size()) + " samples");
  }
  const std::size_t num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldAssignment out;
  out.folds.resize(k);
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto idx : members) {
      out.folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& f : out.folds) std::sort(f.begin(), f.end());
  return out;
}

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

  std::size_t num_classes() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * k_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1) {
    if (truth >= k_ || predicted >= k_) {
      throw InvalidArgument("eval: label pair (" + std::to_string(truth) + ", " +
                            std::to_string(predicted) + ") outside [0, " + std::to_string(k_) + ")");
    }
    counts_[truth * k_ + predicted] += n;
  }
  std::uint64_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  }
  std::uint64_t row_sum(std::size_t i) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < k_; ++j) s += at(i, j);
    return s;
  }
  std::uint64_t col_sum(std::size_t j) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < k_; ++i) s += at(i, j);
    return s;
  }
  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < k_; ++i) s += at(i, i);
    return s;
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw ShapeError("eval: confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth,
                                        std::span<const std::size_t> predicted, std::size_t k) {
  if (truth.size() != predicted.size()) {
    throw InvalidArgument("eval: " + std::to_string(truth.size()) + " truth labels vs " +
                          std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double kappa = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_f = 0.0;
  double weighted_f = 0.0;
};

// Precision/recall/F are 0 when their denominator is 0. Kappa with p_e == 1 is
// defined as 1 when p_o == 1 and 0 otherwise.
inline MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw InvalidArgument("eval: metrics of an empty confusion matrix");
  const double n = static_cast<double>(total);
  const std::size_t k = cm.num_classes();
  MetricsReport r;
  r.accuracy = static_cast<double>(cm.trace()) / n;
  double p_e = 0.0;
  r.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double row = static_cast<double>(cm.row_sum(c));
    const double col = static_cast<double>(cm.col_sum(c));
    const double hit = static_cast<double>(cm.at(c, c));
    p_e += (row * col) / (n * n);
    auto& m = r.per_class[c];
    m.support = cm.row_sum(c);
    m.precision = col > 0 ? hit / col : 0.0;
    m.recall = row > 0 ? hit / row : 0.0;
    const double pr = m.precision + m.recall;
    m.f_measure = pr > 0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    r.macro_f += m.f_measure;
    r.weighted_f += m.f_measure * row;
  }
  r.macro_f /= static_cast<double>(k);
  r.weighted_f /= n;
  const double p_o = r.accuracy;
  if (1.0 - p_e <= 0.0) {
    r.kappa = p_o == 1.0 ? 1.0 : 0.0;
  } else {
    r.kappa = (p_o - p_e) / (1.0 - p_e);
  }
  return r;
}

}  // namespace sitsrnn
