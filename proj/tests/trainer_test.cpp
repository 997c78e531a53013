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

#include "dfcl/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"

namespace dfcl {
namespace {

SyntheticData Linear(long long n, int m, int d, unsigned long long seed) {
  GeneratorConfig g;
  g.n = n;
  g.m = m;
  g.d = d;
  g.family = "linear";
  g.seed = seed;
  return GenerateSynthetic(g);
}

TrainConfig Small(Backend b) {
  TrainConfig c;
  c.backend = b;
  c.epochs = 6;
  c.warm_start_epochs = 2;
  c.hidden = {16, 8};
  c.batch_size = 64;
  c.lr = 3e-3;
  c.seed = 4;
  return c;
}

TEST(Train, TwoStageFitsNoiselessLinearData) {
  SyntheticData s = Linear(2000, 3, 3, 5);
  TrainConfig c;
  c.backend = Backend::kTwoStage;
  c.epochs = 200;
  c.hidden = {32, 32};
  c.batch_size = 128;
  c.lr = 3e-3;
  c.seed = 1;
  TrainResult r = Train(s.data, c);
  EXPECT_LT(r.records.back().prediction, 1e-3);
  EXPECT_LT(PredictionLoss(s.data, Forward(r.params, s.data.features())), 1e-3);
}

TEST(Train, LossAccountingHoldsExactly) {
  SyntheticData s = Linear(400, 3, 3, 2);
  for (Backend b : {Backend::kPll, Backend::kMerl, Backend::kIfd, Backend::kIfdSoftmax,
                    Backend::kTwoStage}) {
    TrainConfig c = Small(b);
    c.alpha = 0.7;
    c.tau = 2.0;
    TrainResult r = Train(s.data, c);
    ASSERT_EQ(r.records.size(), 6u);
    for (const auto& rec : r.records) {
      EXPECT_EQ(rec.total, rec.alpha * rec.prediction + rec.decision);
      if (rec.warm_start || b == Backend::kTwoStage) EXPECT_EQ(rec.decision, 0.0);
    }
    EXPECT_TRUE(r.records[0].warm_start);
    EXPECT_FALSE(r.records[2].warm_start);
  }
}

TEST(Train, SeedDeterminism) {
  SyntheticData s = Linear(300, 3, 3, 3);
  for (Backend b : {Backend::kMerl, Backend::kIfd}) {
    TrainConfig c = Small(b);
    TrainResult a = Train(s.data, c);
    TrainResult d = Train(s.data, c);
    ASSERT_EQ(a.records.size(), d.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      EXPECT_EQ(a.records[k].prediction, d.records[k].prediction);
      EXPECT_EQ(a.records[k].decision, d.records[k].decision);
    }
    for (std::size_t l = 0; l < a.params.layers.size(); ++l) {
      EXPECT_TRUE(a.params.layers[l].weight == d.params.layers[l].weight);
    }
  }
}

TEST(Train, IfdGradientRouting) {
  SyntheticData s = Linear(200, 3, 3, 6);
  TrainConfig c = Small(Backend::kIfd);
  c.alpha = 0.0;
  ModelConfig mc;
  mc.layer_widths = c.hidden;
  mc.num_treatments = 3;
  mc.input_dim = 3;
  ModelParams p = InitModel(mc);
  ForwardCache cache = ForwardWithCache(p, s.data.features());
  PredictionMatrix pred = SplitHeads(cache.output, 3);
  BatchObjective obj = ComputeBatchObjective(s.data, pred, c, false);
  GradientPair ifd = ImprovedGradient(s.data, pred, c.lambda_grid);
  EXPECT_TRUE(obj.upstream.d_revenue == ifd.d_revenue);
  EXPECT_TRUE(obj.upstream.d_cost == ifd.d_cost);
  ParamGradients routed = Backward(p, cache, obj.upstream);
  ParamGradients direct = Backward(p, s.data.features(), ifd);
  for (std::size_t l = 0; l < routed.size(); ++l) {
    EXPECT_TRUE(routed[l].weight == direct[l].weight);
    EXPECT_TRUE(routed[l].bias == direct[l].bias);
  }
}

TEST(Train, NonFiniteLossAbortsWithEpoch) {
  RctDataset d = testing::MakeData({0, 1, 0, 1}, {1e300, 1.0, 2.0, 1.0}, {0, 1, 0, 1}, 2);
  TrainConfig c = Small(Backend::kTwoStage);
  c.warm_start_epochs = 0;
  try {
    Train(d, c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos) << e.what();
  }
}

TEST(Train, LogLinesAndHeldOutSnapshots) {
  SyntheticData s = Linear(600, 3, 3, 7);
  SplitResult sp = Split(s.data, 0.7, 1);
  TrainConfig c = Small(Backend::kPll);
  c.eval_every = 3;
  c.eval_budgets = {0.2, 0.5};
  std::ostringstream log;
  TrainResult r = Train(sp.first, c, &sp.second, &log);
  EXPECT_TRUE(r.records[0].eval.empty());
  ASSERT_EQ(r.records[2].eval.size(), 2u);
  EXPECT_EQ(r.records[2].eval[0].first, 0.2);
  std::istringstream lines(log.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    EXPECT_EQ(line.rfind("epoch=", 0), 0u);
    EXPECT_NE(line.find(" wall_time="), std::string::npos);
    EXPECT_NE(line.find(" total="), std::string::npos);
  }
  EXPECT_EQ(count, 6);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.epochs = 3;
  c.warm_start_epochs = 4;
  EXPECT_THROW(c.Validate(), ConfigError);
  c.warm_start_epochs = 0;
  c.backend = Backend::kMerl;
  c.tau = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c.tau = 1.0;
  c.alpha = -1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  EXPECT_THROW(ParseBackend("dpm"), ConfigError);
}

TEST(TrainConfig, EchoRoundTrip) {
  KeyValueConfig kv = KeyValueConfig::Parse(
      "train.alpha=0.5\ntrain.lambdas=0.1,0.5\ntrain.backend=merl\ntrain.tau=3\n"
      "train.epochs=40\ntrain.warm_start_epochs=20\nseed=9\neval.budgets=1,2\n");
  TrainConfig c = TrainConfig::FromConfig(kv);
  EXPECT_EQ(c.backend, Backend::kMerl);
  EXPECT_EQ(c.tau, 3.0);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.lambda_grid.values(), (std::vector<double>{0.1, 0.5}));
  TrainConfig back = TrainConfig::FromConfig(KeyValueConfig::Parse(c.Echo()));
  EXPECT_EQ(back.Echo(), c.Echo());
}

TEST(EvaluateCheckpoint, MismatchedTreatmentsRejected) {
  SyntheticData s = Linear(50, 3, 3, 8);
  ModelConfig mc;
  mc.num_treatments = 2;
  mc.input_dim = 3;
  EXPECT_THROW(EvaluateCheckpoint(InitModel(mc), s.data, {}), ConfigError);
}

TEST(EvaluateCheckpoint, ZeroModelCollapsesToControl) {
  GeneratorConfig g;
  g.n = 3000;
  g.m = 4;
  g.d = 5;
  SyntheticData s = GenerateSynthetic(g);
  ModelConfig mc;
  mc.num_treatments = 4;
  mc.input_dim = 5;
  ModelParams p = InitModel(mc);
  for (auto& l : p.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  EvaluationReport rep = EvaluateCheckpoint(p, s.data, {0.0, 0.3, 1.0}, &s.truth);
  const OutcomeEstimate control = EvaluatePolicy(s.data, std::vector<int>(3000, 0));
  for (const auto& pt : rep.curve.points) {
    EXPECT_EQ(pt.estimate.per_capita_cost, 0.0);
    EXPECT_EQ(pt.estimate.per_capita_revenue, control.per_capita_revenue);
  }
  ASSERT_TRUE(rep.oracle_curve.has_value());
  EXPECT_GT(rep.oracle_curve->points.back().estimate.per_capita_revenue,
            control.per_capita_revenue);
  EXPECT_FALSE(rep.aucc.has_value());
}

TEST(EvaluateCheckpoint, BinaryReportsAucc) {
  GeneratorConfig g;
  g.n = 2000;
  g.m = 2;
  g.d = 6;
  SyntheticData s = GenerateSynthetic(g);
  ModelConfig mc;
  mc.num_treatments = 2;
  mc.input_dim = 6;
  mc.layer_widths = {8};
  EvaluationReport rep = EvaluateCheckpoint(InitModel(mc), s.data, {});
  EXPECT_TRUE(rep.aucc.has_value());
  EXPECT_EQ(rep.budgets.size(), 12u);
}

}  // namespace
}  // namespace dfcl
