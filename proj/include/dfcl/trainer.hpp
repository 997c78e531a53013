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

// Decision-focused training loop: the loss is
//
//   total = alpha * prediction_loss + decision_loss
//
// where the decision term comes from one of the backends below, summed over
// the lambda grid. The first `warm_start_epochs` epochs train the prediction
// loss alone.

#ifndef DFCL_TRAINER_HPP_
#define DFCL_TRAINER_HPP_

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dfcl/allocation_solver.hpp"
#include "dfcl/blackbox_gradient.hpp"
#include "dfcl/common.hpp"
#include "dfcl/config.hpp"
#include "dfcl/policy_evaluation.hpp"
#include "dfcl/predictor.hpp"
#include "dfcl/rct_data.hpp"
#include "dfcl/surrogate_losses.hpp"

namespace dfcl {

enum class Backend { kPll, kMerl, kIfd, kIfdSoftmax, kTwoStage };

inline Backend ParseBackend(const std::string& name) {
  if (name == "pll") return Backend::kPll;
  if (name == "merl") return Backend::kMerl;
  if (name == "ifd") return Backend::kIfd;
  if (name == "ifd-softmax") return Backend::kIfdSoftmax;
  if (name == "two-stage") return Backend::kTwoStage;
  throw ConfigError("unknown backend: " + name +
                    " (expected pll, merl, ifd, ifd-softmax, two-stage)");
}

inline const char* BackendName(Backend b) {
  switch (b) {
    case Backend::kPll: return "pll";
    case Backend::kMerl: return "merl";
    case Backend::kIfd: return "ifd";
    case Backend::kIfdSoftmax: return "ifd-softmax";
    case Backend::kTwoStage: return "two-stage";
  }
  return "?";
}

struct TrainConfig {
  double alpha = 1.0;
  LambdaGrid lambda_grid{{0.1, 0.5, 1.0}};
  Backend backend = Backend::kTwoStage;
  double tau = 1.0;  // MERL only
  int epochs = 100;
  int warm_start_epochs = 0;
  WarmStartObjective warm_start_objective = WarmStartObjective::kSquaredError;
  double lr = 1e-3;
  // Mini-batch size for the prediction loss and the softmax surrogates;
  // <= 0 means the whole set.
  long long batch_size = 1024;
  // Batch size for the flip-step backends; <= 0 (default) means full passes.
  long long ifd_batch_size = 0;
  unsigned long long seed = 0;
  std::vector<int> hidden = {64, 32, 32};
  Activation activation = Activation::kRelu;
  GradientOptions gradient;
  // Held-out EOM snapshots.
  int eval_every = 10;
  std::vector<double> eval_budgets;

  void Validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("train: alpha must be >= 0");
    if (backend == Backend::kMerl && !(tau > 0.0)) {
      throw ConfigError("train: tau must be > 0");
    }
    if (epochs < 0 || warm_start_epochs < 0) {
      throw ConfigError("train: epoch counts must be >= 0");
    }
    if (warm_start_epochs > epochs) {
      throw ConfigError("train: warm_start_epochs exceeds epochs");
    }
    if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (eval_every < 1) throw ConfigError("train: eval_every must be >= 1");
  }

  static TrainConfig FromConfig(const KeyValueConfig& kv,
                                const std::string& section = "train") {
    TrainConfig c;
    c.alpha = kv.GetDouble(section, "alpha", c.alpha);
    c.lambda_grid = LambdaGrid(kv.GetDoubleList(section, "lambdas", c.lambda_grid.values()));
    c.backend = ParseBackend(kv.GetString(section, "backend", BackendName(c.backend)));
    c.tau = kv.GetDouble(section, "tau", c.tau);
    c.epochs = static_cast<int>(kv.GetInt(section, "epochs", c.epochs));
    c.warm_start_epochs =
        static_cast<int>(kv.GetInt(section, "warm_start_epochs", c.warm_start_epochs));
    const std::string ws = kv.GetString(section, "warm_start_objective", "squared-error");
    if (ws == "squared-error") {
      c.warm_start_objective = WarmStartObjective::kSquaredError;
    } else if (ws == "cross-entropy") {
      c.warm_start_objective = WarmStartObjective::kCrossEntropy;
    } else {
      throw ConfigError("train: unknown warm_start_objective " + ws);
    }
    c.lr = kv.GetDouble(section, "lr", c.lr);
    c.batch_size = kv.GetInt(section, "batch_size", c.batch_size);
    c.ifd_batch_size = kv.GetInt(section, "ifd_batch_size", c.ifd_batch_size);
    c.seed = static_cast<unsigned long long>(kv.GetInt(section, "seed", 0));
    std::vector<long long> hidden;
    for (int w : c.hidden) hidden.push_back(w);
    hidden = kv.GetIntList(section, "hidden", hidden);
    c.hidden.assign(hidden.begin(), hidden.end());
    c.activation = ParseActivation(kv.GetString(section, "activation", "relu"));
    c.gradient.step_floor = kv.GetDouble(section, "step_floor", c.gradient.step_floor);
    c.gradient.step_cap = kv.GetDouble(section, "step_cap", c.gradient.step_cap);
    c.eval_every = static_cast<int>(kv.GetInt(section, "eval_every", c.eval_every));
    c.eval_budgets = kv.GetDoubleList("eval", "budgets", c.eval_budgets);
    c.Validate();
    return c;
  }

  // key=value echo stored next to checkpoints.
  std::string Echo() const {
    std::ostringstream os;
    auto list = [&](const auto& v) {
      std::string s;
      for (std::size_t k = 0; k < v.size(); ++k) {
        s += (k ? "," : "") + FormatDouble(static_cast<double>(v[k]));
      }
      return s;
    };
    os << "train.alpha=" << FormatDouble(alpha) << '\n'
       << "train.lambdas=" << list(lambda_grid.values()) << '\n'
       << "train.backend=" << BackendName(backend) << '\n'
       << "train.tau=" << FormatDouble(tau) << '\n'
       << "train.epochs=" << epochs << '\n'
       << "train.warm_start_epochs=" << warm_start_epochs << '\n'
       << "train.warm_start_objective="
       << (warm_start_objective == WarmStartObjective::kSquaredError ? "squared-error"
                                                                     : "cross-entropy")
       << '\n'
       << "train.lr=" << FormatDouble(lr) << '\n'
       << "train.batch_size=" << batch_size << '\n'
       << "train.ifd_batch_size=" << ifd_batch_size << '\n'
       << "train.seed=" << seed << '\n'
       << "train.hidden=" << list(hidden) << '\n'
       << "train.activation=" << ActivationName(activation) << '\n'
       << "train.step_floor=" << FormatDouble(gradient.step_floor) << '\n'
       << "train.step_cap=" << FormatDouble(gradient.step_cap) << '\n'
       << "train.eval_every=" << eval_every << '\n'
       << "eval.budgets=" << list(eval_budgets) << '\n';
    return os.str();
  }
};

struct EpochRecord {
  int epoch = 0;
  bool warm_start = false;
  double alpha = 0.0;  // weight applied this epoch (1 during warm start)
  double prediction = 0.0;
  double decision = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
  // (per-capita budget, EOM revenue) on held-out data, when scheduled.
  std::vector<std::pair<double, double>> eval;
};

// Key=value line; the wall-clock time sits in its own `wall_time` field.
inline std::string FormatEpochRecord(const EpochRecord& r) {
  std::ostringstream os;
  os << "epoch=" << r.epoch << " phase=" << (r.warm_start ? "warm" : "decision")
     << " alpha=" << FormatDouble(r.alpha)
     << " prediction=" << FormatDouble(r.prediction)
     << " decision=" << FormatDouble(r.decision)
     << " total=" << FormatDouble(r.total);
  if (!r.eval.empty()) {
    os << " eval=";
    for (std::size_t k = 0; k < r.eval.size(); ++k) {
      os << (k ? ";" : "") << FormatDouble(r.eval[k].first) << ':'
         << FormatDouble(r.eval[k].second);
    }
  }
  os << " wall_time=" << FormatDouble(r.wall_seconds);
  return os.str();
}

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> records;
};

// Prediction loss, decision loss, and the combined upstream gradient of one
// batch.
struct BatchObjective {
  double prediction = 0.0;
  double decision = 0.0;
  GradientPair upstream;
};

inline BatchObjective ComputeBatchObjective(const RctDataset& batch,
                                            const PredictionMatrix& pred,
                                            const TrainConfig& config,
                                            bool warm) {
  BatchObjective out;
  GradientPair g_pred;
  out.prediction = PredictionLoss(batch, pred, &g_pred);
  const double alpha = warm ? 1.0 : config.alpha;
  out.upstream = g_pred;
  out.upstream *= alpha;
  if (warm) return out;
  GradientPair g_dec;
  switch (config.backend) {
    case Backend::kTwoStage:
      return out;
    case Backend::kPll:
      out.decision = PolicyLearningLoss(batch, pred, config.lambda_grid, &g_dec);
      break;
    case Backend::kMerl:
      out.decision =
          MaxEntropyLoss(batch, pred, config.lambda_grid, config.tau, &g_dec);
      break;
    case Backend::kIfd:
      g_dec = ImprovedGradient(batch, pred, config.lambda_grid, config.gradient);
      out.decision = EomDualLoss(batch, pred, config.lambda_grid);
      break;
    case Backend::kIfdSoftmax:
      g_dec = IfdlSoftmax(batch, pred, config.lambda_grid, config.gradient).gradient;
      out.decision = EomDualLoss(batch, pred, config.lambda_grid);
      break;
  }
  out.upstream += g_dec;
  return out;
}

inline bool UsesFlipSteps(Backend b) {
  return b == Backend::kIfd || b == Backend::kIfdSoftmax;
}

inline TrainResult Train(const RctDataset& data, const TrainConfig& config,
                         const RctDataset* eval_data = nullptr,
                         std::ostream* log = nullptr) {
  config.Validate();
  if (data.empty()) throw ValidationError("training data is empty");
  if (config.warm_start_objective == WarmStartObjective::kCrossEntropy &&
      config.warm_start_epochs > 0) {
    throw ConfigError("cross-entropy warm start is only available through WarmStart");
  }
  ModelConfig mc;
  mc.layer_widths = config.hidden;
  mc.num_treatments = data.num_treatments();
  mc.input_dim = data.num_features();
  mc.activation = config.activation;
  mc.seed = config.seed;
  TrainResult result;
  result.params = InitModel(mc);
  ModelParams& params = result.params;

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const bool warm = epoch < config.warm_start_epochs;
    const long long bs =
        (!warm && UsesFlipSteps(config.backend)) ? config.ifd_batch_size
                                                 : config.batch_size;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.warm_start = warm;
    rec.alpha = warm ? 1.0 : config.alpha;
    const double nd = static_cast<double>(data.size());
    for (const auto& idx : MakeBatches(data.size(), bs, rng)) {
      RctDataset subset;
      const bool whole = idx.size() == data.size();
      if (!whole) subset = data.Subset(idx);
      const RctDataset& batch = whole ? data : subset;
      ForwardCache cache = ForwardWithCache(params, batch.features());
      const PredictionMatrix pred =
          SplitHeads(cache.output, params.config.num_treatments);
      BatchObjective obj = ComputeBatchObjective(batch, pred, config, warm);
      if (!std::isfinite(obj.prediction) || !std::isfinite(obj.decision)) {
        throw NumericError("epoch " + std::to_string(epoch) +
                           ": non-finite loss (prediction=" +
                           FormatDouble(obj.prediction) +
                           ", decision=" + FormatDouble(obj.decision) + ")");
      }
      const double share = static_cast<double>(idx.size()) / nd;
      rec.prediction += share * obj.prediction;
      rec.decision += share * obj.decision;
      if (!OptimizerStep(&params, Backward(params, cache, obj.upstream), config.lr)) {
        if (log) *log << "epoch=" << epoch << " skipped_update=non_finite_gradient\n";
      }
    }
    rec.total = rec.alpha * rec.prediction + rec.decision;
    if (eval_data && !config.eval_budgets.empty() &&
        (epoch + 1) % config.eval_every == 0) {
      const PredictionMatrix held = Forward(params, eval_data->features());
      for (double b : config.eval_budgets) {
        double rev = std::numeric_limits<double>::quiet_NaN();
        try {
          rev = EvaluateAtBudget(*eval_data, held, b).estimate.per_capita_revenue;
        } catch (const InfeasibleError&) {
        }
        rec.eval.emplace_back(b, rev);
      }
    }
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    if (log) *log << FormatEpochRecord(rec) << '\n';
    result.records.push_back(std::move(rec));
  }
  return result;
}

struct EvaluationReport {
  std::vector<double> budgets;
  CostCurve curve;
  std::optional<double> aucc;
  std::optional<CostCurve> oracle_curve;  // ground truth as predictions
};

// Cost curve (and AUCC for binary treatments) of a model on held-out data.
// Empty `budgets` selects DefaultBudgetGrid.
inline EvaluationReport EvaluateCheckpoint(const ModelParams& params,
                                           const RctDataset& data,
                                           std::vector<double> budgets,
                                           const CounterfactualMatrix* truth = nullptr) {
  if (params.config.num_treatments != data.num_treatments()) {
    throw ConfigError("checkpoint has M=" +
                      std::to_string(params.config.num_treatments) +
                      " but data has M=" + std::to_string(data.num_treatments()));
  }
  const PredictionMatrix pred = Forward(params, data.features());
  EvaluationReport report;
  if (budgets.empty()) budgets = DefaultBudgetGrid(data, pred);
  report.budgets = budgets;
  report.curve = ComputeCostCurve(data, pred, budgets);
  if (data.num_treatments() == 2) {
    try {
      report.aucc = Aucc(data, pred);
    } catch (const NumericError&) {
    }
  }
  if (truth) {
    PredictionMatrix oracle{truth->revenue, truth->cost};
    report.oracle_curve = ComputeCostCurve(data, oracle, budgets);
  }
  return report;
}

}  // namespace dfcl

#endif  // DFCL_TRAINER_HPP_
