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

// Command-line front end. Verbs:
//
//   generate  synthetic RCT dataset + counterfactual matrix
//   train     checkpoint + per-epoch log
//   solve     allocation CSV under a total budget
//   evaluate  cost curve CSV and a key=value summary (AUCC when M = 2)
//   report    models x budgets table from several curve CSVs
//
// Exit codes: 0 ok, 1 usage, 2 validation/config, 3 numeric or infeasible.

#ifndef DFCL_CLI_HPP_
#define DFCL_CLI_HPP_

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dfcl/allocation_solver.hpp"
#include "dfcl/common.hpp"
#include "dfcl/config.hpp"
#include "dfcl/policy_evaluation.hpp"
#include "dfcl/predictor.hpp"
#include "dfcl/rct_data.hpp"
#include "dfcl/trainer.hpp"

namespace dfcl::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kNumeric = 3,
};

namespace internal {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

inline void RefuseClobber(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw UsageError("refusing to overwrite " + path + " (pass --force)");
  }
}

// Writes through `path.tmp` and a rename.
inline void WriteFile(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << content;
    if (!out) throw ValidationError("failed writing " + path);
  }
  std::filesystem::rename(tmp, path);
}

inline std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  bool force = false;

  KeyValueConfig Load() const {
    KeyValueConfig kv =
        config_path.empty() ? KeyValueConfig{} : KeyValueConfig::Load(config_path);
    for (const auto& o : overrides) kv.Override(o);
    return kv;
  }
};

inline void AddCommon(CLI::App* app, Common* c) {
  app->add_option("-c,--config", c->config_path, "key=value config file");
  app->add_option("--set", c->overrides, "override, e.g. train.alpha=0.5");
  app->add_flag("-f,--force", c->force, "overwrite existing outputs");
}

// Predictions for `data` from a checkpoint, or read from a predictions CSV
// whose ids must match the dataset order.
inline PredictionMatrix LoadPredictions(const RctDataset* data,
                                        const std::string& checkpoint,
                                        const std::string& predictions,
                                        std::vector<long long>* ids) {
  if (checkpoint.empty() == predictions.empty()) {
    throw UsageError("pass exactly one of --checkpoint or --predictions");
  }
  if (!checkpoint.empty()) {
    if (!data) throw UsageError("--checkpoint needs --data");
    Checkpoint ck = LoadCheckpoint(checkpoint);
    if (ck.params.config.num_treatments != data->num_treatments()) {
      throw ConfigError("checkpoint has M=" +
                        std::to_string(ck.params.config.num_treatments) +
                        " but data has M=" + std::to_string(data->num_treatments()));
    }
    if (ck.params.config.input_dim != data->num_features()) {
      throw ConfigError("checkpoint expects " +
                        std::to_string(ck.params.config.input_dim) +
                        " features but data has " +
                        std::to_string(data->num_features()));
    }
    *ids = data->ids();
    return Forward(ck.params, data->features());
  }
  auto in = OpenInput(predictions);
  auto [pid, m] = ParseOutcomeMatrixCsv(in);
  if (data) {
    if (pid != data->ids()) {
      throw ValidationError("prediction ids do not match dataset ids");
    }
    if (m.revenue.cols() != data->num_treatments()) {
      throw ConfigError("predictions have M=" + std::to_string(m.revenue.cols()) +
                        " but data has M=" + std::to_string(data->num_treatments()));
    }
  }
  *ids = std::move(pid);
  return PredictionMatrix{std::move(m.revenue), std::move(m.cost)};
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  Common common;
  std::string out;
  std::string truth;
};

inline void RunGenerate(const GenerateArgs& a) {
  KeyValueConfig kv = a.common.Load();
  GeneratorConfig g = GeneratorConfig::FromConfig(kv);
  RefuseClobber(a.out, a.common.force);
  RefuseClobber(a.truth, a.common.force);
  SyntheticData s = GenerateSynthetic(g);
  std::ostringstream d, t;
  WriteCsv(d, s.data);
  WriteCounterfactualCsv(t, s.data.ids(), s.truth);
  WriteFile(a.out, d.str());
  WriteFile(a.truth, t.str());
}

struct TrainArgs {
  Common common;
  std::string data;
  std::string eval_data;
  std::string checkpoint;
  std::string log;
  std::string backend;
};

inline void RunTrain(const TrainArgs& a) {
  KeyValueConfig kv = a.common.Load();
  if (!a.backend.empty()) kv.Set("train.backend", a.backend);
  TrainConfig config = TrainConfig::FromConfig(kv);
  RefuseClobber(a.checkpoint, a.common.force);
  RefuseClobber(a.checkpoint + ".manifest", a.common.force);
  RefuseClobber(a.log, a.common.force);
  RctDataset data = LoadCsv(a.data);
  std::optional<RctDataset> held;
  if (!a.eval_data.empty()) {
    held = LoadCsv(a.eval_data, CsvSchema{data.num_treatments(), data.num_features()});
  }
  std::ostringstream log;
  TrainResult r;
  try {
    r = Train(data, config, held ? &*held : nullptr, &log);
  } catch (const NumericError&) {
    // Keep the epochs that completed as the diagnostic dump.
    WriteFile(a.log, log.str());
    throw;
  }
  SaveCheckpoint(a.checkpoint, r.params, config.Echo());
  WriteFile(a.log, log.str());
}

struct SolveArgs {
  Common common;
  std::string data;
  std::string checkpoint;
  std::string predictions;
  std::string out;
  std::string trace;
  double budget = -1.0;
};

inline void RunSolve(const SolveArgs& a) {
  KeyValueConfig kv = a.common.Load();
  double budget = a.budget;
  if (budget < 0.0) budget = kv.GetDouble("solve", "budget", -1.0);
  if (budget < 0.0) throw UsageError("solve needs --budget (or solve.budget)");
  RefuseClobber(a.out, a.common.force);
  if (!a.trace.empty()) RefuseClobber(a.trace, a.common.force);
  std::optional<RctDataset> data;
  if (!a.data.empty()) data = LoadCsv(a.data);
  std::vector<long long> ids;
  PredictionMatrix pred =
      LoadPredictions(data ? &*data : nullptr, a.checkpoint, a.predictions, &ids);
  std::vector<SolverTraceEntry> trace;
  SolverOptions opt;
  opt.eps = kv.GetDouble("solve", "eps", 0.0);
  opt.max_iter = static_cast<int>(kv.GetInt("solve", "max_iter", opt.max_iter));
  opt.trace = &trace;
  DualSolution sol = SolveBudget(pred, budget, opt);
  std::ostringstream os;
  WriteAllocationCsv(os, ids, sol.allocation);
  WriteFile(a.out, os.str());
  if (!a.trace.empty()) {
    std::ostringstream ts;
    WriteSolverTrace(ts, trace);
    WriteFile(a.trace, ts.str());
  }
}

struct EvaluateArgs {
  Common common;
  std::string data;
  std::string checkpoint;
  std::string predictions;
  std::string truth;
  std::string out;
  std::string oracle_out;
  std::string summary;
};

inline void RunEvaluate(const EvaluateArgs& a) {
  KeyValueConfig kv = a.common.Load();
  RefuseClobber(a.out, a.common.force);
  if (!a.summary.empty()) RefuseClobber(a.summary, a.common.force);
  if (!a.oracle_out.empty()) {
    if (a.truth.empty()) throw UsageError("--oracle-out needs --truth");
    RefuseClobber(a.oracle_out, a.common.force);
  }
  RctDataset data = LoadCsv(a.data);
  std::vector<long long> ids;
  PredictionMatrix pred = LoadPredictions(&data, a.checkpoint, a.predictions, &ids);
  std::vector<double> budgets = kv.GetDoubleList("eval", "budgets", {});
  if (budgets.empty()) {
    budgets = DefaultBudgetGrid(data, pred,
                                static_cast<int>(kv.GetInt("eval", "grid_points", 12)));
  }
  std::sort(budgets.begin(), budgets.end());
  EvaluationOptions opt;
  opt.eps = kv.GetDouble("eval", "eps", 0.0);
  CostCurve curve = ComputeCostCurve(data, pred, budgets, opt);
  std::ostringstream os;
  WriteCurveCsv(os, curve);
  WriteFile(a.out, os.str());

  std::ostringstream summary;
  summary << "n=" << data.size() << '\n' << "m=" << data.num_treatments() << '\n';
  if (data.num_treatments() == 2) {
    summary << "aucc=" << FormatDouble(Aucc(data, pred)) << '\n';
  }
  double mean_rev = 0.0;
  for (const auto& p : curve.points) mean_rev += p.estimate.per_capita_revenue;
  if (!curve.points.empty()) mean_rev /= static_cast<double>(curve.points.size());
  summary << "mean_per_capita_revenue=" << FormatDouble(mean_rev) << '\n';
  if (!a.truth.empty()) {
    auto in = OpenInput(a.truth);
    auto [tid, truth] = ParseOutcomeMatrixCsv(in);
    if (tid != data.ids()) throw ValidationError("truth ids do not match dataset ids");
    PredictionMatrix oracle{truth.revenue, truth.cost};
    CostCurve oc = ComputeCostCurve(data, oracle, budgets, opt);
    if (!a.oracle_out.empty()) {
      std::ostringstream o;
      WriteCurveCsv(o, oc);
      WriteFile(a.oracle_out, o.str());
    }
    if (data.num_treatments() == 2) {
      summary << "oracle_aucc=" << FormatDouble(Aucc(data, oracle)) << '\n';
    }
  }
  if (!a.summary.empty()) WriteFile(a.summary, summary.str());
}

struct ReportArgs {
  Common common;
  std::vector<std::string> curves;  // name=path
  std::string out;
};

inline void RunReport(const ReportArgs& a, std::ostream& out) {
  if (!a.out.empty()) RefuseClobber(a.out, a.common.force);
  std::vector<std::string> names;
  std::vector<CostCurve> curves;
  for (const auto& item : a.curves) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw UsageError("--curve expects name=path, got " + item);
    }
    names.push_back(item.substr(0, eq));
    auto in = OpenInput(item.substr(eq + 1));
    curves.push_back(ParseCurveCsv(in));
  }
  const std::string table = FormatReportTable(names, curves);
  if (a.out.empty()) {
    out << table;
  } else {
    WriteFile(a.out, table);
  }
}

}  // namespace internal

// Parses argv, dispatches to a verb, and maps failures to exit codes with a
// single-line message on `err`.
inline int Run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  using namespace internal;
  CLI::App app{"Decision-focused causal learning toolkit", "dfcl"};
  app.require_subcommand(1);
  long long threads = 0;
  app.add_option("--threads", threads, "cap on worker threads (0 = hardware)")
      ->check(CLI::NonNegativeNumber);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a synthetic RCT dataset");
  AddCommon(g, &gen.common);
  g->add_option("-o,--out", gen.out, "dataset CSV")->required();
  g->add_option("--truth", gen.truth, "counterfactual matrix CSV")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a predictor");
  AddCommon(t, &tr.common);
  t->add_option("-d,--data", tr.data, "training dataset CSV")->required();
  t->add_option("--eval-data", tr.eval_data, "held-out dataset for EOM snapshots");
  t->add_option("--checkpoint", tr.checkpoint, "checkpoint output")->required();
  t->add_option("--log", tr.log, "epoch log output")->required();
  t->add_option("--backend", tr.backend, "pll, merl, ifd, ifd-softmax, two-stage");

  SolveArgs so;
  auto* s = app.add_subcommand("solve", "allocate treatments under a budget");
  AddCommon(s, &so.common);
  s->add_option("-d,--data", so.data, "dataset CSV (features for --checkpoint)");
  s->add_option("--checkpoint", so.checkpoint, "model checkpoint");
  s->add_option("--predictions", so.predictions, "predictions CSV id,r*,c*");
  s->add_option("--budget", so.budget, "total budget B");
  s->add_option("-o,--out", so.out, "allocation CSV")->required();
  s->add_option("--trace", so.trace, "bisection trace output");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "offline cost curve and AUCC");
  AddCommon(e, &ev.common);
  e->add_option("-d,--data", ev.data, "held-out dataset CSV")->required();
  e->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
  e->add_option("--predictions", ev.predictions, "predictions CSV id,r*,c*");
  e->add_option("--truth", ev.truth, "counterfactual matrix CSV");
  e->add_option("-o,--out", ev.out, "cost-curve CSV")->required();
  e->add_option("--oracle-out", ev.oracle_out, "ground-truth curve CSV");
  e->add_option("--summary", ev.summary, "key=value summary output");

  ReportArgs re;
  auto* r = app.add_subcommand("report", "compare evaluation curves");
  AddCommon(r, &re.common);
  r->add_option("--curve", re.curves, "name=curve.csv, first is the baseline")
      ->required();
  r->add_option("-o,--out", re.out, "table output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "dfcl: " << ex.what() << '\n';
    return kUsage;
  }

  try {
    if (threads > 0) SetMaxThreads(static_cast<std::size_t>(threads));
    if (*g) RunGenerate(gen);
    if (*t) RunTrain(tr);
    if (*s) RunSolve(so);
    if (*e) RunEvaluate(ev);
    if (*r) RunReport(re, out);
  } catch (const UsageError& ex) {
    err << "dfcl: " << ex.what() << '\n';
    return kUsage;
  } catch (const NumericError& ex) {
    err << "dfcl: " << ex.what() << '\n';
    return kNumeric;
  } catch (const Error& ex) {
    err << "dfcl: " << ex.what() << '\n';
    return kValidation;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "dfcl: " << ex.what() << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace dfcl::cli

#endif  // DFCL_CLI_HPP_
