#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sitsrnn/svm.hpp"

using namespace sitsrnn;

namespace {

std::vector<FlatSample> blobs(std::size_t per_class, std::size_t k, std::size_t f, double separation,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FlatSample> out;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      FlatSample s{Vector(f), c};
      for (std::size_t j = 0; j < f; ++j) s.features[j] = noise(rng) + (j == c % f ? separation : 0.0);
      out.push_back(std::move(s));
    }
  }
  return out;
}

double accuracy(const SvmModel& m, const std::vector<FlatSample>& data) {
  const auto pred = svm_predict_all(m, data);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hit += pred[i] == data[i].label ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace

TEST(Svm, DefaultsMatchTheReferenceSetup) {
  SvmOptions opt;
  EXPECT_EQ(opt.c, 100.0);
  EXPECT_EQ(opt.gamma, 0.01);
  EXPECT_EQ(opt.tol, 1e-3);
}

TEST(Svm, KernelAtZeroDistanceIsOne) {
  const Vector u{0.3, -7.0, 12.0};
  EXPECT_EQ(rbf_kernel(u, u, 0.01), 1.0);
  EXPECT_EQ(rbf_kernel(u, u, 5.0), 1.0);
  EXPECT_NEAR(rbf_kernel(Vector{0.0}, Vector{2.0}, 0.5), std::exp(-2.0), 1e-15);
}

TEST(Svm, SeparatesTenSigmaBlobs) {
  const auto data = blobs(40, 2, 2, 10.0, 1);
  const auto m = svm_fit(data, 2);
  EXPECT_EQ(accuracy(m, data), 1.0);
}

TEST(Svm, DualObjectiveNeverDecreases) {
  const auto data = blobs(60, 3, 4, 1.5, 2);
  SvmOptions opt;
  opt.record_objective = true;
  const auto m = svm_fit(data, 3, opt);
  for (const auto& machine : m.machines) {
    ASSERT_FALSE(machine.objective_trace.empty());
    for (std::size_t t = 1; t < machine.objective_trace.size(); ++t) {
      EXPECT_GE(machine.objective_trace[t], machine.objective_trace[t - 1] - 1e-9) << "step " << t;
    }
  }
}

TEST(Svm, SolutionSatisfiesBoxAndKkt) {
  const auto data = blobs(50, 3, 3, 1.0, 3);
  SvmOptions opt;
  opt.c = 10.0;
  opt.gamma = 0.5;
  const auto m = svm_fit(data, 3, opt);
  for (const auto& machine : m.machines) {
    EXPECT_FALSE(machine.alphas.empty());
    std::vector<double> alpha(data.size(), 0.0);
    for (std::size_t t = 0; t < machine.alphas.size(); ++t) {
      EXPECT_GE(machine.alphas[t], 0.0);
      EXPECT_LE(machine.alphas[t], opt.c);
      alpha[machine.support_indices[t]] = machine.alphas[t];
    }
    double equality = 0.0;
    for (std::size_t t = 0; t < machine.alphas.size(); ++t) equality += machine.alphas[t] * machine.signs[t];
    EXPECT_NEAR(equality, 0.0, 1e-9);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto label = data[i].label;
      if (label != machine.positive_class && label != machine.negative_class) continue;
      const double y = label == machine.positive_class ? 1.0 : -1.0;
      const double margin = y * decision_value(machine, data[i].features, opt.gamma);
      // Stopping rule bounds every KKT violation by tol.
      if (alpha[i] == 0.0) {
        EXPECT_GE(margin, 1.0 - opt.tol) << i;
      } else if (alpha[i] >= opt.c) {
        EXPECT_LE(margin, 1.0 + opt.tol) << i;
      } else {
        EXPECT_NEAR(margin, 1.0, opt.tol) << i;
      }
    }
  }
}

TEST(Svm, OneMachinePerClassPair) {
  const auto data = blobs(20, 4, 4, 3.0, 4);
  const auto m = svm_fit(data, 4);
  EXPECT_EQ(m.machines.size(), 6u);
}

TEST(Svm, TwoClassesFollowTheSignOfTheDecision) {
  const auto data = blobs(30, 2, 3, 2.0, 5);
  const auto m = svm_fit(data, 2);
  ASSERT_EQ(m.machines.size(), 1u);
  for (const auto& s : data) {
    const double d = decision_value(m.machines[0], s.features, m.gamma);
    EXPECT_EQ(svm_predict(m, s.features), d > 0.0 ? 0u : 1u);
  }
}

TEST(Svm, MajorityVoteAndTieBreak) {
  // Hand-built machines with constant decisions: A beats B, A beats C,
  // B beats C gives votes (2, 1, 0).
  SvmModel m;
  m.num_classes = 3;
  m.num_features = 1;
  m.gamma = 1.0;
  auto constant = [](std::size_t pos, std::size_t neg, double bias) {
    BinaryMachine b;
    b.positive_class = pos;
    b.negative_class = neg;
    b.bias = bias;
    return b;
  };
  m.machines = {constant(0, 1, 1.0), constant(0, 2, 1.0), constant(1, 2, 1.0)};
  EXPECT_EQ(svm_predict(m, Vector{0.0}), 0u);
  std::reverse(m.machines.begin(), m.machines.end());
  EXPECT_EQ(svm_predict(m, Vector{0.0}), 0u);
  // A cycle gives one vote each; the lowest index wins.
  m.machines = {constant(0, 1, 1.0), constant(1, 2, 1.0), constant(0, 2, -1.0)};
  EXPECT_EQ(svm_predict(m, Vector{0.0}), 0u);
}

TEST(Svm, DeterministicAndThreadIndependent) {
  const auto data = blobs(30, 3, 4, 1.0, 6);
  SvmOptions opt;
  opt.seed = 5;
  const auto a = svm_fit(data, 3, opt);
  opt.threads = 3;
  const auto b = svm_fit(data, 3, opt);
  ASSERT_EQ(a.machines.size(), b.machines.size());
  for (std::size_t p = 0; p < a.machines.size(); ++p) {
    EXPECT_EQ(a.machines[p].alphas, b.machines[p].alphas);
    EXPECT_EQ(a.machines[p].bias, b.machines[p].bias);
  }
  EXPECT_EQ(svm_predict_all(a, data), svm_predict_all(b, data, 4));
}

TEST(Svm, SkipsAbsentClassesAndRejectsBadInput) {
  auto data = blobs(10, 3, 3, 3.0, 7);
  for (auto& s : data) {
    if (s.label == 1) s.label = 2;
  }
  const auto m = svm_fit(data, 3);
  EXPECT_EQ(m.machines.size(), 1u);
  for (auto p : svm_predict_all(m, data)) EXPECT_NE(p, 1u);

  auto single = blobs(5, 1, 2, 0.0, 8);
  EXPECT_THROW(svm_fit(single, 2), InvalidArgument);
  auto bad = blobs(5, 2, 2, 3.0, 8);
  bad[3].features[0] = NAN;
  EXPECT_THROW(svm_fit(bad, 2), InvalidArgument);
  EXPECT_THROW(svm_predict(m, Vector{1.0}), ShapeError);
}

TEST(Svm, IterationCapRaises) {
  const auto data = blobs(40, 2, 3, 0.5, 9);
  SvmOptions opt;
  opt.max_iterations = 2;
  EXPECT_THROW(svm_fit(data, 2, opt), ConvergenceError);
}
