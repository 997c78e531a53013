/*
 * Copyright 2026 The DFCL Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dfcl/surrogate_losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

namespace dfcl {
namespace {

using testing::MakeData;
using testing::RandomData;
using testing::RandomMatrix;
using testing::RandomPrediction;

TEST(PredictionLoss, PerfectObservedEntriesGiveZero) {
  std::mt19937_64 rng(1);
  RctDataset d = RandomData(20, 3, rng);
  PredictionMatrix p = RandomPrediction(20, 3, rng);
  for (std::size_t i = 0; i < d.size(); ++i) {
    p.revenue(i, d.treatment(i)) = d.revenue()[i];
    p.cost(i, d.treatment(i)) = d.cost()[i];
  }
  EXPECT_EQ(PredictionLoss(d, p), 0.0);
}

TEST(PredictionLoss, HandExample) {
  RctDataset d = MakeData({0, 0}, {1.0, 2.0}, {0.0, 1.0}, 2);
  PredictionMatrix p{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  p.revenue(0, 0) = 0.0;  // residual 1 on revenue
  p.cost(0, 0) = 0.0;
  p.revenue(1, 0) = 2.0;
  p.cost(1, 0) = 0.0;  // residual 1 on cost
  EXPECT_DOUBLE_EQ(PredictionLoss(d, p), 0.5);
}

TEST(PredictionLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  RctDataset d = RandomData(15, 3, rng);
  PredictionMatrix p = RandomPrediction(15, 3, rng);
  GradientPair g;
  PredictionLoss(d, p, &g);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 15; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      PredictionMatrix a = p, b = p;
      a.revenue(i, j) += h;
      b.revenue(i, j) -= h;
      EXPECT_NEAR(g.d_revenue(i, j), (PredictionLoss(d, a) - PredictionLoss(d, b)) / (2 * h), 1e-7);
      a = p;
      b = p;
      a.cost(i, j) += h;
      b.cost(i, j) -= h;
      EXPECT_NEAR(g.d_cost(i, j), (PredictionLoss(d, a) - PredictionLoss(d, b)) / (2 * h), 1e-7);
    }
  }
}

TEST(MseFull, Examples) {
  std::mt19937_64 rng(3);
  CounterfactualMatrix t{RandomMatrix(6, 3, rng), RandomMatrix(6, 3, rng)};
  PredictionMatrix same{t.revenue, t.cost};
  EXPECT_EQ(MseFull(t, same), 0.0);
  PredictionMatrix off{t.revenue.array() + 1.0, t.cost};
  EXPECT_DOUBLE_EQ(MseFull(t, off), 1.0);
  PredictionMatrix p = RandomPrediction(6, 3, rng);
  double naive = 0.0;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double a = t.revenue(i, j) - p.revenue(i, j);
      const double b = t.cost(i, j) - p.cost(i, j);
      naive += a * a + b * b;
    }
  }
  EXPECT_NEAR(MseFull(t, p), naive / 18.0, 1e-12);
  PredictionMatrix wrong = RandomPrediction(5, 3, rng);
  EXPECT_THROW(MseFull(t, wrong), ValidationError);
}

TEST(PolicyLearningLoss, UniformSoftmaxSingleSample) {
  RctDataset d = MakeData({1}, {3.0}, {1.0}, 2, std::vector<double>{0.5, 0.5});
  PredictionMatrix p{Matrix::Constant(1, 2, 0.7), Matrix::Constant(1, 2, 0.2)};
  LambdaGrid grid({0.1, 0.5, 1.0});
  double expected = 0.0;
  for (double lambda : grid) expected -= 2.0 * (3.0 - lambda * 1.0) * 0.5;
  EXPECT_NEAR(PolicyLearningLoss(d, p, grid), expected, 1e-12);
}

TEST(PolicyLearningLoss, RowShiftInvariance) {
  std::mt19937_64 rng(4);
  RctDataset d = RandomData(30, 4, rng);
  PredictionMatrix p = RandomPrediction(30, 4, rng);
  LambdaGrid grid({0.5});
  PredictionMatrix shifted = p;
  for (Eigen::Index i = 0; i < 30; ++i) shifted.revenue.row(i).array() += 0.37 * i;
  EXPECT_NEAR(PolicyLearningLoss(d, p, grid), PolicyLearningLoss(d, shifted, grid), 1e-12);
  // r^ + 0.5 k and c^ + k keep r^ - 0.5 c^ fixed.
  PredictionMatrix both = p;
  both.revenue.array() += 0.5 * 1.3;
  both.cost.array() += 1.3;
  EXPECT_NEAR(PolicyLearningLoss(d, p, grid), PolicyLearningLoss(d, both, grid), 1e-12);
  EXPECT_NEAR(MaxEntropyLoss(d, p, grid, 2.5), MaxEntropyLoss(d, both, grid, 2.5), 1e-12);
}

TEST(PolicyLearningLoss, GridAdditivity) {
  std::mt19937_64 rng(5);
  RctDataset d = RandomData(25, 3, rng);
  PredictionMatrix p = RandomPrediction(25, 3, rng);
  GradientPair g12, g1, g2;
  const double l12 = PolicyLearningLoss(d, p, LambdaGrid({0.2, 0.9}), &g12);
  const double l1 = PolicyLearningLoss(d, p, LambdaGrid({0.2}), &g1);
  const double l2 = PolicyLearningLoss(d, p, LambdaGrid({0.9}), &g2);
  EXPECT_NEAR(l12, l1 + l2, 1e-12);
  EXPECT_LT((g12.d_revenue - g1.d_revenue - g2.d_revenue).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((g12.d_cost - g1.d_cost - g2.d_cost).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PolicyLearningLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  RctDataset d = RandomData(12, 4, rng);
  PredictionMatrix p = RandomPrediction(12, 4, rng);
  LambdaGrid grid({0.1, 0.5, 1.0});
  for (double tau : {1.0, 0.3, 4.0}) {
    GradientPair g;
    MaxEntropyLoss(d, p, grid, tau, &g);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < 12; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        PredictionMatrix a = p, b = p;
        a.revenue(i, j) += h;
        b.revenue(i, j) -= h;
        const double fr = (MaxEntropyLoss(d, a, grid, tau) - MaxEntropyLoss(d, b, grid, tau)) / (2 * h);
        EXPECT_NEAR(g.d_revenue(i, j), fr, 1e-7);
        a = p;
        b = p;
        a.cost(i, j) += h;
        b.cost(i, j) -= h;
        const double fc = (MaxEntropyLoss(d, a, grid, tau) - MaxEntropyLoss(d, b, grid, tau)) / (2 * h);
        EXPECT_NEAR(g.d_cost(i, j), fc, 1e-7);
      }
    }
  }
}

TEST(MaxEntropyLoss, UnitTemperatureIsBitIdentical) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    RctDataset d = RandomData(40, 5, rng);
    PredictionMatrix p = RandomPrediction(40, 5, rng);
    LambdaGrid grid({0.1, 0.5, 1.0});
    GradientPair a, b;
    const double pll = PolicyLearningLoss(d, p, grid, &a);
    const double merl = MaxEntropyLoss(d, p, grid, 1.0, &b);
    EXPECT_EQ(pll, merl);
    EXPECT_TRUE(a.d_revenue == b.d_revenue);
    EXPECT_TRUE(a.d_cost == b.d_cost);
  }
}

TEST(MaxEntropyLoss, HighTemperatureLimit) {
  std::mt19937_64 rng(8);
  RctDataset d = RandomData(50, 4, rng);
  PredictionMatrix p = RandomPrediction(50, 4, rng);
  LambdaGrid grid({0.1, 0.5, 1.0});
  double limit = 0.0;
  for (double lambda : grid) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      limit -= (d.revenue()[i] - lambda * d.cost()[i]) / d.propensity_of(i) / 4.0;
    }
  }
  limit /= 50.0;
  const double merl = MaxEntropyLoss(d, p, grid, 1e6);
  EXPECT_NEAR(merl, limit, 1e-6 * std::abs(limit));
}

TEST(MaxEntropyLoss, LowTemperatureConcentrates) {
  double r[3] = {1.0, 1.1, 0.2};
  double c[3] = {0.0, 0.0, 0.0};
  double q[3];
  internal::RowSoftmax(r, c, 3, 0.5, 0.01, q);
  EXPECT_GT(q[1], 0.999);
}

TEST(MaxEntropyLoss, RejectsNonpositiveTau) {
  std::mt19937_64 rng(9);
  RctDataset d = RandomData(5, 2, rng);
  PredictionMatrix p = RandomPrediction(5, 2, rng);
  EXPECT_THROW(MaxEntropyLoss(d, p, LambdaGrid({1.0}), 0.0), ConfigError);
  EXPECT_THROW(MaxEntropyLoss(d, p, LambdaGrid({1.0}), -1.0), ConfigError);
}

TEST(LambdaGrid, Validation) {
  EXPECT_THROW(LambdaGrid(std::vector<double>{}), ConfigError);
  EXPECT_THROW(LambdaGrid({0.5, 0.5}), ConfigError);
  EXPECT_THROW(LambdaGrid({-0.1}), ConfigError);
  EXPECT_NO_THROW(LambdaGrid({0.0, 0.1}));
}

TEST(LossBreakdown, TotalIdentity) {
  LossBreakdown b = LossBreakdown::Combine(0.5, 2.0, -3.0);
  EXPECT_EQ(b.total, 0.5 * 2.0 + -3.0);
}

TEST(FullInfoDualLosses, OrderPreservingPredictions) {
  std::mt19937_64 rng(10);
  CounterfactualMatrix t{RandomMatrix(30, 4, rng), RandomMatrix(30, 4, rng)};
  PredictionMatrix p{2.0 * t.revenue, 2.0 * t.cost};
  LambdaGrid grid({0.3, 0.8});
  double best = 0.0;
  for (double lambda : grid) {
    best -= (t.revenue - lambda * t.cost).rowwise().maxCoeff().sum();
  }
  EXPECT_NEAR(FullInfoDualLossesOf(t, p, grid, 1.0).hard, best / 30.0, 1e-12);
}

TEST(FullInfoDualLosses, ZeroTemperatureLimit) {
  std::mt19937_64 rng(11);
  CounterfactualMatrix t{RandomMatrix(20, 3, rng), RandomMatrix(20, 3, rng)};
  PredictionMatrix p = RandomPrediction(20, 3, rng);
  LambdaGrid grid({0.5});
  FullInfoDualLosses l = FullInfoDualLossesOf(t, p, grid, 1e-4);
  EXPECT_NEAR(l.temperature, l.hard, 1e-6);
}

TEST(FullInfoDualLosses, UniformSoftmax) {
  std::mt19937_64 rng(12);
  CounterfactualMatrix t{RandomMatrix(10, 3, rng), RandomMatrix(10, 3, rng)};
  PredictionMatrix p{Matrix::Ones(10, 3), Matrix::Ones(10, 3)};
  LambdaGrid grid({0.2, 0.7});
  double expected = 0.0;
  for (double lambda : grid) expected -= (t.revenue - lambda * t.cost).rowwise().mean().sum();
  EXPECT_NEAR(FullInfoDualLossesOf(t, p, grid, 1.0).softmax, expected / 10.0, 1e-12);
}

// Lightweight version of the unbiasedness protocols.
TEST(Unbiasedness, PredictionAndPolicyLossesSmall) {
  GeneratorConfig g;
  g.n = 300;
  g.m = 3;
  g.noise = 0.2;
  g.seed = 21;
  SyntheticData s = GenerateSynthetic(g);
  std::mt19937_64 rng(99);
  PredictionMatrix p = RandomPrediction(300, 3, rng);
  LambdaGrid grid({0.1, 0.5, 1.0});
  double pl = 0.0, pll = 0.0;
  const int draws = 2000;
  int used = 0;
  for (int k = 0; k < draws; ++k) {
    RctDataset d = ReassignUniform(s.data, s.truth, rng);
    pl += PredictionLoss(d, p);
    pll += PolicyLearningLoss(d, p, grid);
    ++used;
  }
  pl /= used;
  pll /= used;
  const double mse = MseFull(s.truth, p);
  const double ddl = FullInfoDualLossesOf(s.truth, p, grid, 1.0).softmax;
  EXPECT_NEAR(pl / mse, 1.0, 0.03);
  EXPECT_NEAR(pll / ddl, 1.0, 0.03);
}

}  // namespace
}  // namespace dfcl
