#include "gesturelab/dbb.hpp"
#include "../support/gradcheck.hpp"
#include "../support/oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace gesturelab;
using namespace gesturelab::dbb;
namespace oracle = gesturelab::testing::oracle;

namespace {

oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return g;
}

Matrix random_predictions(Rng& rng, Eigen::Index B, Eigen::Index C) {
  Matrix p(B, C);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(0.01, 0.99);
  return p;
}

}  // namespace

TEST(PositiveMask, ThresholdZero) {
  Matrix t(1, 3);
  t << 16.0 / 136.0, 0.0, 1.0;
  const auto m = positive_mask(t);
  EXPECT_TRUE(m(0, 0));
  EXPECT_FALSE(m(0, 1));
  EXPECT_TRUE(m(0, 2));
}

TEST(LossFactor, Cases) {
  BatchClassStats s{32, {0, 20, 4}, {32, 12, 28}};
  EXPECT_EQ(loss_factor(s, 0), 0.0);
  EXPECT_EQ(loss_factor(s, 1), 1.0);
  EXPECT_EQ(loss_factor(s, 2), 8.0);
}

TEST(LossFactor, RangeProperty) {
  for (std::size_t B = 1; B <= 40; ++B) {
    for (std::size_t pos = 0; pos <= B; ++pos) {
      BatchClassStats s{B, {pos}, {B - pos}};
      const double F = loss_factor(s, 0);
      if (pos == 0) {
        ASSERT_EQ(F, 0.0);
      } else {
        ASSERT_GE(F, 1.0);
        ASSERT_LE(F, static_cast<double>(B));
        ASSERT_GE(F * pos, static_cast<double>(pos));
        ASSERT_LE(F * pos, static_cast<double>(B) + 1e-12);
      }
    }
  }
}

TEST(ConditionalLoss, HandCases) {
  Matrix p(2, 1), t(2, 1);
  p << 0.5, 0.5;
  t << 1.0, 0.0;
  const auto mask = positive_mask(t);
  auto l = conditional_loss(p, t, mask, 0);
  EXPECT_DOUBLE_EQ(l.value, 0.5);
  l = conditional_loss(t, t, mask, 0);
  EXPECT_EQ(l.value, 0.0);
  Matrix none = Matrix::Zero(2, 1);
  l = conditional_loss(p, none, positive_mask(none), 0);
  EXPECT_EQ(l.value, 0.0);
  EXPECT_EQ(l.gradient.squaredNorm(), 0.0);
  l = conditional_loss(p, t, mask, 0, 3.0);
  EXPECT_DOUBLE_EQ(l.value, 3 * 0.25 + 0.25);
}

TEST(BatchLoss, AllAbsentGivesZero) {
  Rng rng(1);
  const auto p = random_predictions(rng, 5, 3);
  const auto r = batch_loss(p, Matrix::Zero(5, 3));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.gradient.squaredNorm(), 0.0);
}

TEST(BatchLoss, SingleClassHandCase) {
  Matrix p(2, 1), t(2, 1);
  p << 0.5, 0.5;
  t << 1.0, 0.0;
  const auto r = batch_loss(p, t);
  EXPECT_DOUBLE_EQ(r.value, 0.5);
  EXPECT_EQ(r.terms[0].factor, 1.0);
}

TEST(BatchLoss, MatchesTransliteration) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto B = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto C = static_cast<Eigen::Index>(1 + rng.below(4));
    const auto p = random_predictions(rng, B, C);
    const auto t = gesturelab::testing::random_targets(rng, B, C, 0.6);
    EXPECT_NEAR(batch_loss(p, t).value, oracle::dbb_batch_loss(to_grid(p), to_grid(t), 0.0), 1e-12);
    std::vector<double> w(static_cast<std::size_t>(C));
    for (auto& v : w) v = rng.uniform(0.5, 5.0);
    BatchLossOptions opt;
    opt.weights = ClassWeights{w};
    EXPECT_NEAR(batch_loss(p, t, opt).value, oracle::dbb_batch_loss(to_grid(p), to_grid(t), 0.0, w), 1e-12);
  }
}

TEST(BatchLoss, NoneModeIsPlainSummedMse) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_predictions(rng, 7, 3);
    const auto t = gesturelab::testing::random_targets(rng, 7, 3);
    BatchLossOptions opt;
    opt.mode = BalanceMode::none;
    EXPECT_NEAR(batch_loss(p, t, opt).value, oracle::plain_summed_mse(to_grid(p), to_grid(t)), 1e-12);
  }
}

TEST(BatchLoss, PermutationInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_predictions(rng, 8, 4);
    const auto t = gesturelab::testing::random_targets(rng, 8, 4);
    std::vector<Eigen::Index> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix pp(8, 4), tp(8, 4);
    for (Eigen::Index i = 0; i < 8; ++i) {
      pp.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
      tp.row(i) = t.row(perm[static_cast<std::size_t>(i)]);
    }
    EXPECT_NEAR(batch_loss(p, t).value, batch_loss(pp, tp).value, 1e-12);
  }
}

TEST(BatchLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_predictions(rng, 6, 3);
    const auto t = gesturelab::testing::random_targets(rng, 6, 3);
    for (bool positive_only : {false, true}) {
      BatchLossOptions opt;
      opt.scale_positive_only = positive_only;
      const auto g = batch_loss(p, t, opt).gradient;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        Matrix a = p, b = p;
        a.data()[i] += 1e-6;
        b.data()[i] -= 1e-6;
        const double numeric = (batch_loss(a, t, opt).value - batch_loss(b, t, opt).value) / 2e-6;
        ASSERT_NEAR(g.data()[i], numeric, 1e-7);
      }
    }
  }
}

TEST(BatchLoss, ScalePositiveOnlyLeavesNegativeTermUnscaled) {
  Matrix p(4, 1), t(4, 1);
  p << 0.5, 0.5, 0.5, 0.5;
  t << 1, 0, 0, 0;  // F = 4
  BatchLossOptions opt;
  EXPECT_DOUBLE_EQ(batch_loss(p, t, opt).value, 4 * (0.25 + 0.25));
  opt.scale_positive_only = true;
  EXPECT_DOUBLE_EQ(batch_loss(p, t, opt).value, 4 * 0.25 + 0.25);
}

TEST(BatchLoss, NonFiniteReportsClasses) {
  Matrix p(2, 2), t(2, 2);
  p << 0.5, std::nan(""), 0.5, 0.5;
  t << 1, 1, 0, 0;
  try {
    batch_loss(p, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::numeric);
    EXPECT_NE(std::string(e.what()).find("per class"), std::string::npos);
  }
}

TEST(ClassWeights, Arithmetic) {
  Matrix t = Matrix::Zero(100, 3);
  for (int i = 0; i < 10; ++i) t(i, 0) = 1;
  for (int i = 0; i < 30; ++i) t(i, 1) = 1;
  for (int i = 0; i < 60; ++i) t(i, 2) = 1;
  const auto w = class_weights(t);
  EXPECT_DOUBLE_EQ(w.values[0], 10.0);
  EXPECT_DOUBLE_EQ(w.values[1], 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.values[2], 5.0 / 3.0);

  Matrix one = Matrix::Zero(5, 1);
  one(2, 0) = 1;
  EXPECT_EQ(class_weights(one).values[0], 1.0);
  Matrix two = Matrix::Ones(4, 2);
  EXPECT_EQ(class_weights(two).values, (std::vector<double>{2.0, 2.0}));
  Matrix gap = Matrix::Zero(4, 2);
  gap(0, 0) = 1;
  EXPECT_EQ(class_weights(gap).values[1], 0.0);
  EXPECT_ERROR_CATEGORY(class_weights(Matrix::Zero(3, 2)), validation);
}

TEST(Diagnostics, OneLinePerClass) {
  Matrix p(2, 2), t(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  t << 1, 0, 0, 0;
  const auto csv = diagnostics_csv(batch_loss(p, t), {"a", "b"}, 3);
  EXPECT_EQ(csv, "3,a,1,1,1,0.5\n3,b,0,2,0,0\n");
}
