#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "sitsrnn/forest.hpp"

using namespace sitsrnn;

namespace {

// Four Gaussian clusters at the corners of the unit square; opposite corners
// share a label.
std::vector<FlatSample> xor_set(std::size_t per_cluster, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<FlatSample> out;
  for (int cx = 0; cx < 2; ++cx) {
    for (int cy = 0; cy < 2; ++cy) {
      for (std::size_t i = 0; i < per_cluster; ++i) {
        out.push_back({{cx + noise(rng), cy + noise(rng)}, static_cast<std::size_t>(cx ^ cy)});
      }
    }
  }
  return out;
}

std::vector<FlatSample> noisy_blobs(std::size_t n, std::size_t k, std::size_t f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FlatSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    FlatSample s{Vector(f), i % k};
    for (std::size_t j = 0; j < f; ++j) s.features[j] = noise(rng) + (j % k == s.label ? 0.8 : 0.0);
    out.push_back(std::move(s));
  }
  return out;
}

double training_accuracy(const ForestModel& m, const std::vector<FlatSample>& data) {
  const auto pred = rf_predict_all(m, data);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hit += pred[i] == data[i].label ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace

TEST(Forest, DefaultsAreFourHundredTreesOfDepthTen) {
  ForestOptions opt;
  EXPECT_EQ(opt.num_trees, 400u);
  EXPECT_EQ(opt.max_depth, 10u);
}

TEST(Forest, LearnsXor) {
  const auto data = xor_set(50, 0.05, 1);
  ForestOptions opt;
  opt.num_trees = 50;
  opt.seed = 3;
  EXPECT_GE(training_accuracy(rf_fit(data, 2, opt), data), 0.95);
}

TEST(Forest, ConstantLabelsGiveConstantPredictor) {
  auto data = xor_set(10, 0.1, 2);
  for (auto& s : data) s.label = 1;
  ForestOptions opt;
  opt.num_trees = 5;
  const auto m = rf_fit(data, 3, opt);
  EXPECT_TRUE(m.single_class);
  for (auto p : rf_predict_all(m, data)) EXPECT_EQ(p, 1u);
  EXPECT_EQ(rf_predict(m, Vector{5.0, -5.0}).label, 1u);
}

TEST(Forest, DeterministicAndThreadIndependent) {
  const auto data = noisy_blobs(120, 3, 6, 4);
  ForestOptions opt;
  opt.num_trees = 20;
  opt.seed = 9;
  const auto a = rf_fit(data, 3, opt);
  EXPECT_EQ(a, rf_fit(data, 3, opt));
  opt.threads = 4;
  EXPECT_EQ(a, rf_fit(data, 3, opt));
  opt.seed = 10;
  EXPECT_NE(a, rf_fit(data, 3, opt));
}

TEST(Forest, TreesRespectDepthAndHaveNonEmptyLeaves) {
  const auto data = noisy_blobs(200, 4, 9, 5);
  ForestOptions opt;
  opt.num_trees = 10;
  opt.max_depth = 4;
  const auto m = rf_fit(data, 4, opt);
  for (const auto& tree : m.trees) {
    EXPECT_LE(tree.depth(), 4u);
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) continue;
      double total = 0.0;
      for (double c : node.histogram) total += c;
      EXPECT_GT(total, 0.0);
    }
  }
}

TEST(Forest, VoteFractionsSumToOne) {
  const auto data = noisy_blobs(150, 3, 5, 6);
  ForestOptions opt;
  opt.num_trees = 30;
  const auto m = rf_fit(data, 3, opt);
  for (const auto& s : data) {
    const auto p = rf_predict(m, s.features);
    double total = 0.0;
    for (double v : p.vote_fractions) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(p.label, argmax(p.vote_fractions));
  }
}

TEST(Forest, SingleTreePredictsLeafMajority) {
  const auto data = noisy_blobs(100, 3, 4, 7);
  ForestOptions opt;
  opt.num_trees = 1;
  const auto m = rf_fit(data, 3, opt);
  for (const auto& s : data) {
    const auto& hist = m.trees[0].leaf_for(s.features).histogram;
    EXPECT_EQ(rf_predict(m, s.features).label, argmax(hist));
  }
}

TEST(Forest, PredictionInvariantToTreeOrder) {
  const auto data = noisy_blobs(100, 3, 4, 8);
  ForestOptions opt;
  opt.num_trees = 15;
  const auto m = rf_fit(data, 3, opt);
  auto reversed = m;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  for (const auto& s : data) {
    const auto a = rf_predict(m, s.features), b = rf_predict(reversed, s.features);
    EXPECT_EQ(a.label, b.label);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.vote_fractions[k], b.vote_fractions[k], 1e-12);
  }
}

TEST(Forest, EnsembleNoWorseThanSingleTreeOnTrainingData) {
  const auto data = noisy_blobs(600, 4, 12, 11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ForestOptions one;
    one.num_trees = 1;
    one.seed = seed;
    ForestOptions many;
    many.seed = seed;
    EXPECT_GE(training_accuracy(rf_fit(data, 4, many), data), training_accuracy(rf_fit(data, 4, one), data))
        << "seed " << seed;
  }
}

// Bootstrap samples may skip values, so any pairwise midpoint can appear.
TEST(Forest, SplitThresholdsAreMidpoints) {
  const std::vector<FlatSample> data{{{0.0}, 0}, {{1.0}, 0}, {{3.0}, 1}, {{4.0}, 1}};
  const std::set<double> midpoints{0.5, 1.5, 2.0, 2.5, 3.5};
  ForestOptions opt;
  opt.num_trees = 40;
  const auto m = rf_fit(data, 2, opt);
  for (const auto& tree : m.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      EXPECT_TRUE(midpoints.count(node.threshold)) << node.threshold;
    }
  }
}

TEST(Forest, RejectsBadInput) {
  EXPECT_THROW(rf_fit(std::vector<FlatSample>{}, 2), InvalidArgument);
  const std::vector<FlatSample> ragged{{{1.0, 2.0}, 0}, {{1.0}, 1}};
  EXPECT_THROW(rf_fit(ragged, 2), ShapeError);
  const auto data = xor_set(5, 0.1, 1);
  ForestOptions opt;
  opt.num_trees = 3;
  const auto m = rf_fit(data, 2, opt);
  EXPECT_THROW(rf_predict(m, Vector{1.0}), ShapeError);
}
