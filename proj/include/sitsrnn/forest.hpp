#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sitsrnn/error.hpp"
#include "sitsrnn/flat.hpp"
#include "sitsrnn/numerics.hpp"
#include "sitsrnn/parallel.hpp"

namespace sitsrnn {

struct ForestOptions {
  std::size_t num_trees = 400;
  std::size_t max_depth = 10;
  std::uint64_t seed = 0;
  // Features tried per node; floor(sqrt(F)) (at least 1) when unset.
  std::optional<std::size_t> max_features;
  std::size_t threads = 1;
};

struct TreeNode {
  // -1 marks a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  // Class counts of the bootstrap samples that reached this node.
  std::vector<double> histogram;

  bool is_leaf() const noexcept { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
      node = &nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                   : node->right];
    }
    return *node;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [idx, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[idx].is_leaf()) {
        stack.push_back({nodes[idx].left, d + 1});
        stack.push_back({nodes[idx].right, d + 1});
      }
    }
    return best;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t num_trees = 0;
  std::size_t max_depth = 0;
  std::uint64_t seed = 0;
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  // Set when the training data held a single class; the forest then always
  // predicts it.
  bool single_class = false;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct ForestPrediction {
  std::size_t label = 0;
  Vector vote_fractions;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const FlatSample> samples, std::size_t num_classes,
              std::size_t max_depth, std::size_t max_features, std::uint64_t seed)
      : samples_(samples),
        num_classes_(num_classes),
        max_depth_(max_depth),
        max_features_(max_features),
        rng_(seed) {}

  DecisionTree build() {
    const std::size_t n = samples_.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = pick(rng_);
    features_.resize(samples_.front().features.size());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    DecisionTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  std::uint32_t grow(DecisionTree& tree, std::vector<std::size_t>& rows, std::size_t depth) {
    const auto index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<double> hist(num_classes_, 0.0);
    for (auto r : rows) hist[samples_[r].label] += 1.0;
    std::size_t populated = 0;
    for (double c : hist) populated += c > 0.0 ? 1 : 0;
    tree.nodes[index].histogram = hist;
    if (populated <= 1 || depth >= max_depth_ || rows.size() < 2) return index;

    const auto split = best_split(rows, hist);
    if (!split) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (samples_[r].features[split->feature] <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[index].feature = static_cast<std::int32_t>(split->feature);
    tree.nodes[index].threshold = split->threshold;
    const auto l = grow(tree, left, depth + 1);
    const auto r = grow(tree, right, depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }

  struct Split {
    std::size_t feature;
    double threshold;
  };

  // Minimizes the weighted Gini impurity n_l*G_l + n_r*G_r, which is
  // equivalent to maximizing sum_k l_k^2/n_l + sum_k r_k^2/n_r.
  std::optional<Split> best_split(const std::vector<std::size_t>& rows,
                                  const std::vector<double>& hist) {
    // Partial Fisher-Yates: the first max_features_ entries are the sample.
    const std::size_t f_total = features_.size();
    const std::size_t tries = std::min(max_features_, f_total);
    for (std::size_t k = 0; k < tries; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, f_total - 1);
      std::swap(features_[k], features_[pick(rng_)]);
    }

    const double n = static_cast<double>(rows.size());
    std::optional<Split> best;
    double best_score = -1.0;
    std::vector<std::pair<double, std::size_t>> column(rows.size());
    std::vector<double> left(num_classes_), right(num_classes_);
    for (std::size_t k = 0; k < tries; ++k) {
      const std::size_t f = features_[k];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {samples_[rows[i]].features[f], samples_[rows[i]].label};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      right = hist;
      double sq_left = 0.0, sq_right = 0.0;
      for (double c : right) sq_right += c * c;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const std::size_t c = column[i].second;
        sq_left += 2.0 * left[c] + 1.0;
        sq_right -= 2.0 * right[c] - 1.0;
        left[c] += 1.0;
        right[c] -= 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const double n_left = static_cast<double>(i + 1);
        const double score = sq_left / n_left + sq_right / (n - n_left);
        if (score > best_score) {
          best_score = score;
          const double lo = column[i].first, hi = column[i + 1].first;
          double mid = lo + 0.5 * (hi - lo);
          if (!(mid < hi)) mid = lo;
          best = Split{f, mid};
        }
      }
    }
    return best;
  }

  std::span<const FlatSample> samples_;
  std::size_t num_classes_;
  std::size_t max_depth_;
  std::size_t max_features_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> features_;
};

}  // namespace detail

// Bagged CART forest: bootstrap resample per tree, floor(sqrt(F)) features
// per node, Gini splits at midpoints between sorted unique values. Tree t is
// seeded with derive_seed(seed, t), so the thread count never changes the
// result.
inline ForestModel rf_fit(std::span<const FlatSample> samples, std::size_t num_classes,
                          const ForestOptions& opt = {}) {
  const std::size_t f = check_flat_samples(samples, num_classes, "forest");
  if (opt.num_trees < 1) throw InvalidArgument("forest: num_trees must be >= 1");
  if (opt.max_depth < 1) throw InvalidArgument("forest: max_depth must be >= 1");
  ForestModel m;
  m.num_trees = opt.num_trees;
  m.max_depth = opt.max_depth;
  m.seed = opt.seed;
  m.num_classes = num_classes;
  m.num_features = f;
  m.single_class = std::all_of(samples.begin(), samples.end(),
                               [&](const FlatSample& s) { return s.label == samples.front().label; });
  const std::size_t mtry =
      opt.max_features.value_or(std::max<std::size_t>(1, static_cast<std::size_t>(
                                                             std::floor(std::sqrt(static_cast<double>(f))))));
  m.trees.resize(opt.num_trees);
  parallel_for(opt.num_trees, opt.threads, [&](std::size_t t) {
    detail::TreeBuilder builder(samples, num_classes, opt.max_depth, std::max<std::size_t>(1, mtry),
                                derive_seed(opt.seed, t));
    m.trees[t] = builder.build();
  });
  return m;
}

// Averages the per-tree leaf class distributions; ties go to the lowest index.
inline ForestPrediction rf_predict(const ForestModel& m, std::span<const double> x) {
  if (x.size() != m.num_features) {
    throw ShapeError("forest: sample has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(m.num_features));
  }
  ForestPrediction out;
  out.vote_fractions.assign(m.num_classes, 0.0);
  for (const auto& tree : m.trees) {
    const auto& hist = tree.leaf_for(x).histogram;
    const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
    for (std::size_t k = 0; k < hist.size(); ++k) out.vote_fractions[k] += hist[k] / total;
  }
  for (double& v : out.vote_fractions) v /= static_cast<double>(m.trees.size());
  out.label = argmax(out.vote_fractions);
  return out;
}

inline std::vector<std::size_t> rf_predict_all(const ForestModel& m,
                                               std::span<const FlatSample> samples,
                                               std::size_t threads = 1) {
  std::vector<std::size_t> out(samples.size());
  parallel_for(samples.size(), threads,
               [&](std::size_t i) { out[i] = rf_predict(m, samples[i].features).label; });
  return out;
}

}  // namespace sitsrnn
