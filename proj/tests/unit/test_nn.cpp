#include <cmath>

#include <gtest/gtest.h>

#include "flapfoil/errors.hpp"
#include "flapfoil/nn.hpp"
#include "gradcheck.hpp"

using namespace flapfoil;
using namespace flapfoil::nn;
using flapfoil::testing::max_relative_error;
using flapfoil::testing::random_mat;
using flapfoil::testing::randomize;

TEST(ParamSet, BlocksPackInOrder) {
  ParamSet ps;
  const int a = ps.add("a", 2, 3);
  const int b = ps.add("b", 4, 1);
  ps.allocate();
  EXPECT_EQ(ps.size(), 10);
  EXPECT_EQ(ps.blocks()[static_cast<std::size_t>(b)].offset, 6);
  ps.value(a)(1, 2) = 5.0;
  EXPECT_EQ(ps.values(5), 5.0);  // column-major
  EXPECT_THROW(ps.add("c", 1, 1), Error);
}

TEST(Orthogonal, ColumnsOrRowsAreOrthonormalTimesGain) {
  for (auto [rows, cols] : {std::pair<Index, Index>{8, 3}, {3, 8}, {5, 5}}) {
    ParamSet ps;
    const int w = ps.add("w", rows, cols);
    ps.allocate();
    Rng rng(42);
    init_orthogonal(ps, w, 2.0, rng);
    const Mat m = ps.value(w);
    const Mat g = rows >= cols ? Mat(m.transpose() * m) : Mat(m * m.transpose());
    EXPECT_TRUE(g.isApprox(4.0 * Mat::Identity(g.rows(), g.cols()), 1e-12));
  }
}

TEST(Orthogonal, SeededAndDeterministic) {
  ParamSet a, b;
  const int wa = a.add("w", 6, 4);
  const int wb = b.add("w", 6, 4);
  a.allocate();
  b.allocate();
  Rng r1(7), r2(7);
  init_orthogonal(a, wa, 1.0, r1);
  init_orthogonal(b, wb, 1.0, r2);
  EXPECT_EQ(a.values, b.values);
}

TEST(Dense, ForwardIsAffine) {
  ParamSet ps;
  Dense d(ps, "d", 3, 2);
  ps.allocate();
  randomize(ps.values, 1);
  const Mat x = random_mat(3, 5, 2);
  const Mat expect = ps.value(d.weight()) * x + ps.value(d.bias()) * Mat::Ones(1, 5);
  EXPECT_TRUE(d.forward(ps, x).isApprox(expect, 1e-14));
}

TEST(Dense, GradientMatchesFiniteDifferences) {
  ParamSet ps;
  Dense d(ps, "d", 4, 3);
  ps.allocate();
  randomize(ps.values, 3);
  Mat x = random_mat(4, 6, 4);
  const Mat target = random_mat(3, 6, 5);
  auto loss = [&] { return 0.5 * (d.forward(ps, x) - target).squaredNorm(); };
  ps.zero_grad();
  const Mat dx = d.backward(ps, x, d.forward(ps, x) - target, true);
  EXPECT_LT(max_relative_error(ps.values, ps.grads, loss), 1e-4);

  // Input gradient.
  Eigen::Map<Vec> xv(x.data(), x.size());
  Vec xs = xv;
  const Vec dxv = Eigen::Map<const Vec>(dx.data(), dx.size());
  auto loss_x = [&] {
    xv = xs;
    return loss();
  };
  EXPECT_LT(max_relative_error(xs, dxv, loss_x), 1e-4);
}

TEST(Lstm, ZeroInputAndParametersGiveZeroState) {
  ParamSet ps;
  Lstm l(ps, "l", 3, 4);
  ps.allocate();
  const Mat h = l.forward(ps, Mat::Zero(3, 5 * 2), 5);
  EXPECT_EQ(h.rows(), 4);
  EXPECT_EQ(h.cols(), 2);
  EXPECT_TRUE(h.isZero());
}

TEST(Lstm, SingleStepMatchesHandEvaluation) {
  ParamSet ps;
  Lstm l(ps, "l", 2, 1);
  ps.allocate();
  randomize(ps.values, 8);
  const Mat x = random_mat(2, 1, 9);
  const Mat h = l.forward(ps, x, 1);
  const Vec z = ps.value(l.input_weight()) * x.col(0) + ps.value(l.bias()).col(0);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double c = sig(z(0)) * std::tanh(z(2));  // previous cell is zero
  EXPECT_NEAR(h(0, 0), sig(z(3)) * std::tanh(c), 1e-15);
}

TEST(Lstm, BatchColumnsAreIndependent) {
  ParamSet ps;
  Lstm l(ps, "l", 3, 4);
  ps.allocate();
  randomize(ps.values, 10);
  const Index steps = 4;
  const Mat x = random_mat(3, steps * 2, 11);
  const Mat both = l.forward(ps, x, steps);
  Mat x0(3, steps);
  for (Index t = 0; t < steps; ++t) x0.col(t) = x.col(t * 2);
  EXPECT_TRUE(both.col(0).isApprox(l.forward(ps, x0, steps).col(0), 1e-14));
}

TEST(Lstm, GradientMatchesFiniteDifferences) {
  ParamSet ps;
  Lstm l(ps, "l", 3, 4);
  ps.allocate();
  randomize(ps.values, 12);
  const Index steps = 5, batch = 3;
  const Mat x = random_mat(3, steps * batch, 13);
  const Mat target = random_mat(4, batch, 14, 0.3);
  auto loss = [&] { return 0.5 * (l.forward(ps, x, steps) - target).squaredNorm(); };
  Lstm::Cache cache;
  const Mat h = l.forward(ps, x, steps, &cache);
  ps.zero_grad();
  l.backward(ps, cache, h - target);
  EXPECT_LT(max_relative_error(ps.values, ps.grads, loss), 1e-4);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Vec p = Vec::Zero(3);
  Vec g(3);
  g << 2.0, -0.5, 0.0;
  Adam opt(3, {0.1, 0.9, 0.999, 1e-8});
  opt.step(p, g);
  // Bias-corrected first step is lr * g / (|g| + eps).
  EXPECT_NEAR(p(0), -0.1, 1e-8);
  EXPECT_NEAR(p(1), 0.1, 1e-8);
  EXPECT_EQ(p(2), 0.0);
  EXPECT_EQ(opt.t, 1);
}

TEST(Adam, ZeroLearningRateIsExactIdentity) {
  Vec p = random_mat(5, 1, 15).col(0);
  const Vec keep = p;
  Adam opt(5, {0.0, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 3; ++i) opt.step(p, random_mat(5, 1, 16 + i).col(0));
  EXPECT_EQ(p, keep);
}

TEST(Adam, MinimisesQuadratic) {
  Vec p = Vec::Constant(2, 3.0);
  Adam opt(2, {0.05, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 2000; ++i) opt.step(p, 2.0 * p);
  EXPECT_LT(p.norm(), 1e-2);
}
