#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sitsrnn/numerics.hpp"
#include "sitsrnn/parallel.hpp"

using namespace sitsrnn;

TEST(Affine, IdentityReturnsInput) {
  const Vector x{3.0, -1.0}, b{0.0, 0.0};
  EXPECT_EQ(affine(Matrix::identity(2), x, b), (Vector{3.0, -1.0}));
}

TEST(Affine, HandArithmetic) {
  const auto w = Matrix::from_rows({{1, 2}, {3, 4}});
  const Vector x{1.0, 1.0}, b{0.0, 0.0};
  EXPECT_EQ(affine(w, x, b), (Vector{3.0, 7.0}));
}

TEST(Affine, ScalarCase) {
  const Vector x{2.0}, b{5.0};
  EXPECT_EQ(affine(Matrix::from_rows({{1}}), x, b), (Vector{7.0}));
}

TEST(Affine, MismatchNamesBothShapes) {
  const Matrix w(2, 3);
  const Vector x{1.0, 2.0}, b{0.0, 0.0};
  try {
    affine(w, x, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("length 2"), std::string::npos) << msg;
  }
  const Vector b3{0.0, 0.0, 0.0}, x3{1.0, 2.0, 3.0};
  EXPECT_THROW(affine(w, x3, b3), ShapeError);
}

TEST(Affine, IsLinear) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + trial % 7, cols = 1 + trial % 13;
    Matrix w(rows, cols);
    for (double& v : w.values()) v = u(rng);
    Vector x(cols), y(cols), ax_y(cols), zero(rows, 0.0);
    const double a = u(rng);
    for (std::size_t i = 0; i < cols; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      ax_y[i] = a * x[i] + y[i];
    }
    const auto lhs = affine(w, ax_y, zero);
    const auto fx = affine(w, x, zero), fy = affine(w, y, zero);
    for (std::size_t r = 0; r < rows; ++r) EXPECT_NEAR(lhs[r], a * fx[r] + fy[r], 1e-12);
  }
}

TEST(Elementwise, Anchors) {
  const Vector zero{0.0}, big{1000.0};
  EXPECT_EQ(elementwise(Activation::sigmoid, zero)[0], 0.5);
  EXPECT_EQ(elementwise(Activation::tanh, zero)[0], 0.0);
  const double s = elementwise(Activation::sigmoid, big)[0];
  EXPECT_TRUE(std::isfinite(s));
  EXPECT_NEAR(s, 1.0, 1e-12);
  const Vector very_negative{-1000.0};
  EXPECT_GE(elementwise(Activation::sigmoid, very_negative)[0], 0.0);
}

TEST(Elementwise, SigmoidSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  Vector v(200), neg(200);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = u(rng);
    neg[i] = -v[i];
  }
  const auto a = elementwise(Activation::sigmoid, v), b = elementwise(Activation::sigmoid, neg);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(a[i] + b[i], 1.0, 1e-12);
}

TEST(Elementwise, RangesAndErrors) {
  const Vector v{-3.0, -0.1, 0.0, 0.2, 4.0};
  for (double s : elementwise(Activation::sigmoid, v)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  for (double t : elementwise(Activation::tanh, v)) {
    EXPECT_GT(t, -1.0);
    EXPECT_LT(t, 1.0);
  }
  EXPECT_THROW(elementwise(Activation::tanh, Vector{}), InvalidArgument);
  EXPECT_THROW(elementwise(Activation::sigmoid, Vector{NAN}), InvalidArgument);
}

TEST(Softmax, Anchors) {
  EXPECT_EQ(stable_softmax(Vector{0.0, 0.0}), (Vector{0.5, 0.5}));
  const auto big = stable_softmax(Vector{1e4, 1e4, 1e4});
  for (double p : big) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  const auto q = stable_softmax(Vector{std::log(1.0), std::log(3.0)});
  EXPECT_NEAR(q[0], 0.25, 1e-15);
  EXPECT_NEAR(q[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> z(-20.0, 20.0), c(-1e4, 1e4);
  for (int trial = 0; trial < 200; ++trial) {
    Vector logits(1 + trial % 11), shifted;
    for (double& v : logits) v = z(rng);
    const double shift = c(rng);
    for (double v : logits) shifted.push_back(v + shift);
    const auto a = stable_softmax(logits), b = stable_softmax(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Softmax, RejectsBadInput) {
  EXPECT_THROW(stable_softmax(Vector{}), InvalidArgument);
  EXPECT_THROW(stable_softmax(Vector{1.0, INFINITY}), InvalidArgument);
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(Vector{0.1, 0.7, 0.2}), 1u);
  EXPECT_EQ(argmax(Vector{0.5, 0.5}), 0u);
  EXPECT_EQ(argmax(Vector{0.2, 0.4, 0.4}), 1u);
}

TEST(Dot, MatchesNaiveSum) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n = 0; n < 40; ++n) {
    Vector a(n), b(n);
    double naive = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
      naive += a[i] * b[i];
    }
    EXPECT_NEAR(dot(a, b), naive, 1e-13);
  }
}

TEST(Matrix, FromRowsRejectsRaggedInput) {
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
  const auto m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  for (std::size_t threads : {1u, 2u, 5u}) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw InvalidArgument("boom");
               }),
               InvalidArgument);
}

TEST(Parallel, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
}
