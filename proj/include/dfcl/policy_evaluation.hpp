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

// Offline evaluation of allocation policies on RCT data.
//
// The Expected Outcome Metric keeps the samples whose observed treatment
// equals the policy's choice and reweights them by 1 / p_{t_i}:
//
//   rbar = (1/N) sum_i r_i / p_{t_i} * [t_i == choice_i]
//
// which is unbiased for the policy's per-capita revenue under randomized
// assignment (likewise cbar for cost).

#ifndef DFCL_POLICY_EVALUATION_HPP_
#define DFCL_POLICY_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dfcl/allocation_solver.hpp"
#include "dfcl/common.hpp"
#include "dfcl/rct_data.hpp"
#include "dfcl/surrogate_losses.hpp"

namespace dfcl {

struct OutcomeEstimate {
  double per_capita_revenue = 0.0;
  double per_capita_cost = 0.0;
  double matched_fraction = 0.0;
};

inline OutcomeEstimate EvaluatePolicy(const RctDataset& data,
                                      const std::vector<int>& choice) {
  if (choice.size() != data.size()) {
    throw ValidationError("policy length differs from dataset size");
  }
  OutcomeEstimate est;
  const std::size_t n = data.size();
  if (n == 0) return est;
  long long matched = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (choice[i] < 0 || choice[i] >= data.num_treatments()) {
      throw ValidationError("policy choice outside [0, M)");
    }
    if (choice[i] != data.treatment(i)) continue;
    const double p = data.propensity_of(i);
    if (!(p > 0.0)) throw ValidationError("zero propensity for a matched sample");
    est.per_capita_revenue += data.revenue()[i] / p;
    est.per_capita_cost += data.cost()[i] / p;
    ++matched;
  }
  const double nd = static_cast<double>(n);
  est.per_capita_revenue /= nd;
  est.per_capita_cost /= nd;
  est.matched_fraction = static_cast<double>(matched) / nd;
  return est;
}

struct BudgetedOutcome {
  OutcomeEstimate estimate;
  double per_capita_budget = 0.0;
  double lambda = 0.0;
  std::vector<int> choice;
};

struct EvaluationOptions {
  // Stop once per_capita_budget - cbar < eps. Zero selects 1e-6 times the
  // mean observed cost.
  double eps = 0.0;
  int max_iter = 100;
};

// Bisection on lambda until the EOM per-capita cost meets the per-capita
// budget from below; returns the estimate at the accepted multiplier.
inline BudgetedOutcome EvaluateAtBudget(const RctDataset& data,
                                        const PredictionMatrix& pred,
                                        double per_capita_budget,
                                        const EvaluationOptions& options = {}) {
  internal::CheckShapes(data, pred);
  if (!(per_capita_budget >= 0.0)) {
    throw ConfigError("per-capita budget must be >= 0");
  }
  double eps = options.eps;
  if (eps < 0.0) throw ConfigError("eps must be positive");
  if (eps == 0.0) {
    const double scale = data.empty() ? 0.0 : data.cost().cwiseAbs().mean();
    eps = 1e-6 * (scale > 0.0 ? scale : 1.0);
  }
  auto at = [&](double lambda) {
    BudgetedOutcome b;
    b.per_capita_budget = per_capita_budget;
    b.lambda = lambda;
    b.choice = DecideDual(pred, lambda).choice;
    b.estimate = EvaluatePolicy(data, b.choice);
    return b;
  };
  BudgetedOutcome zero = at(0.0);
  if (zero.estimate.per_capita_cost <= per_capita_budget) return zero;

  double hi = InitialLambdaMax(pred);
  BudgetedOutcome best = at(hi);
  for (int k = 0; k < 64 && best.estimate.per_capita_cost > per_capita_budget;
       ++k) {
    hi *= 2.0;
    best = at(hi);
  }
  if (best.estimate.per_capita_cost > per_capita_budget) {
    throw InfeasibleError("per-capita budget " + FormatDouble(per_capita_budget) +
                              " is below the cost floor " +
                              FormatDouble(best.estimate.per_capita_cost),
                          best.estimate.per_capita_cost);
  }
  double lo = 0.0;
  for (int k = 0; k < internal::kMaxHalvings && hi > 0.0; ++k) {
    if (per_capita_budget - best.estimate.per_capita_cost < eps) break;
    BudgetedOutcome cand = at(0.5 * hi);
    if (cand.estimate.per_capita_cost > per_capita_budget) {
      lo = 0.5 * hi;
      break;
    }
    hi *= 0.5;
    best = std::move(cand);
  }
  for (int it = 0; it < options.max_iter; ++it) {
    if (per_capita_budget - best.estimate.per_capita_cost < eps) break;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    BudgetedOutcome cand = at(mid);
    if (cand.estimate.per_capita_cost <= per_capita_budget) {
      hi = mid;
      best = std::move(cand);
    } else {
      lo = mid;
    }
  }
  return best;
}

struct CurvePoint {
  double budget = 0.0;
  double lambda = 0.0;
  OutcomeEstimate estimate;
};

struct CostCurve {
  std::vector<CurvePoint> points;  // ordered by per-capita cost
};

inline CostCurve ComputeCostCurve(const RctDataset& data,
                                  const PredictionMatrix& pred,
                                  const std::vector<double>& budgets,
                                  const EvaluationOptions& options = {}) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw ConfigError("budgets must be sorted ascending");
  }
  CostCurve curve;
  for (double b : budgets) {
    BudgetedOutcome o = EvaluateAtBudget(data, pred, b, options);
    curve.points.push_back({b, o.lambda, o.estimate});
  }
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const CurvePoint& x, const CurvePoint& y) {
                     return x.estimate.per_capita_cost < y.estimate.per_capita_cost;
                   });
  return curve;
}

// `count` evenly spaced per-capita budgets from the cost at the initial
// lambda_max up to the cost at lambda = 0.
inline std::vector<double> DefaultBudgetGrid(const RctDataset& data,
                                             const PredictionMatrix& pred,
                                             int count = 12) {
  if (count < 1) throw ConfigError("budget grid needs at least one point");
  const double top =
      EvaluatePolicy(data, DecideDual(pred, 0.0).choice).per_capita_cost;
  const double floor =
      EvaluatePolicy(data, DecideDual(pred, InitialLambdaMax(pred)).choice)
          .per_capita_cost;
  std::vector<double> grid;
  if (count == 1) return {top};
  for (int k = 0; k < count; ++k) {
    grid.push_back(floor + (top - floor) * k / static_cast<double>(count - 1));
  }
  return grid;
}

// Bootstrap standard error of rbar for a fixed policy.
inline double BootstrapRevenueSe(const RctDataset& data,
                                 const std::vector<int>& choice,
                                 int replicates, unsigned long long seed) {
  if (replicates < 2) throw ConfigError("bootstrap needs >= 2 replicates");
  const std::size_t n = data.size();
  if (n == 0) return 0.0;
  std::vector<double> contrib(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (choice[i] == data.treatment(i)) {
      contrib[i] = data.revenue()[i] / data.propensity_of(i);
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double sum = 0.0, sum_sq = 0.0;
  for (int b = 0; b < replicates; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += contrib[pick(rng)];
    s /= static_cast<double>(n);
    sum += s;
    sum_sq += s * s;
  }
  const double mean = sum / replicates;
  const double var = (sum_sq - replicates * mean * mean) / (replicates - 1);
  return std::sqrt(std::max(0.0, var));
}

// ---------------------------------------------------------------------------
// AUCC (binary treatment)

// Ranking by predicted incremental ROI (r^1 - r^0) / (c^1 - c^0), best first.
// Rows with nonpositive incremental cost rank first when their incremental
// revenue is positive and last otherwise; remaining ties go to the lower
// index.
inline std::vector<std::size_t> RoiRanking(const PredictionMatrix& pred) {
  if (pred.cols() != 2) throw ConfigError("AUCC requires exactly two treatments");
  const auto n = static_cast<std::size_t>(pred.rows());
  std::vector<int> group(n);
  std::vector<double> roi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = pred.revenue(i, 1) - pred.revenue(i, 0);
    const double dc = pred.cost(i, 1) - pred.cost(i, 0);
    if (dc > 0.0) {
      group[i] = 1;
      roi[i] = dr / dc;
    } else {
      group[i] = dr > 0.0 ? 0 : 2;
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (group[a] != group[b]) return group[a] < group[b];
    if (group[a] == 1 && roi[a] != roi[b]) return roi[a] > roi[b];
    return false;
  });
  return order;
}

// Descending score order, ties by index.
inline std::vector<std::size_t> ScoreRanking(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

struct AuccCurve {
  std::vector<double> incremental_cost;     // k = 0..N
  std::vector<double> incremental_revenue;  // k = 0..N
  double aucc = 0.0;
};

// Treats the top-k of `order` for k = 0..N; each point is the EOM increment
// over the all-control policy. The curve is linearly interpolated and its
// area divided by the rectangle spanned by the endpoints.
inline AuccCurve AuccFromRanking(const RctDataset& data,
                                 const std::vector<std::size_t>& order) {
  if (data.num_treatments() != 2) {
    throw ConfigError("AUCC requires exactly two treatments");
  }
  if (order.size() != data.size()) {
    throw ValidationError("ranking length differs from dataset size");
  }
  const double nd = static_cast<double>(data.size());
  AuccCurve out;
  out.incremental_cost.reserve(order.size() + 1);
  out.incremental_revenue.reserve(order.size() + 1);
  double c = 0.0, r = 0.0, area = 0.0;
  out.incremental_cost.push_back(0.0);
  out.incremental_revenue.push_back(0.0);
  for (std::size_t i : order) {
    const double sign = data.treatment(i) == 1 ? 1.0 : -1.0;
    const double w = sign / (nd * data.propensity_of(i));
    const double nc = c + w * data.cost()[i];
    const double nr = r + w * data.revenue()[i];
    area += (nc - c) * (nr + r) * 0.5;
    c = nc;
    r = nr;
    out.incremental_cost.push_back(c);
    out.incremental_revenue.push_back(r);
  }
  const double rect = c * r;
  if (!(std::abs(rect) > 0.0) || !std::isfinite(rect)) {
    throw NumericError("AUCC undefined: zero total incremental cost or revenue");
  }
  out.aucc = area / rect;
  return out;
}

inline double Aucc(const RctDataset& data, const PredictionMatrix& pred) {
  internal::CheckShapes(data, pred);
  return AuccFromRanking(data, RoiRanking(pred)).aucc;
}

// ---------------------------------------------------------------------------
// Export

// `budget, per_capita_cost, per_capita_revenue, matched_fraction`.
inline void WriteCurveCsv(std::ostream& out, const CostCurve& curve) {
  out << "budget,per_capita_cost,per_capita_revenue,matched_fraction\n";
  for (const auto& p : curve.points) {
    out << FormatDouble(p.budget) << ',' << FormatDouble(p.estimate.per_capita_cost)
        << ',' << FormatDouble(p.estimate.per_capita_revenue) << ','
        << FormatDouble(p.estimate.matched_fraction) << '\n';
  }
}

inline CostCurve ParseCurveCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      Trim(line) != "budget,per_capita_cost,per_capita_revenue,matched_fraction") {
    throw ParseError(1, "expected cost-curve header");
  }
  CostCurve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto f = SplitFields(line);
    CurvePoint p;
    if (f.size() != 4 || !ParseDouble(f[0], &p.budget) ||
        !ParseDouble(f[1], &p.estimate.per_capita_cost) ||
        !ParseDouble(f[2], &p.estimate.per_capita_revenue) ||
        !ParseDouble(f[3], &p.estimate.matched_fraction)) {
      throw ParseError(line_no, "malformed cost-curve row");
    }
    curve.points.push_back(p);
  }
  return curve;
}

// Plain-text comparison, one row per model and one column per budget, with
// the mean relative improvement over the first model.
inline std::string FormatReportTable(const std::vector<std::string>& names,
                                     const std::vector<CostCurve>& curves) {
  if (names.size() != curves.size() || curves.empty()) {
    throw ConfigError("report needs one name per curve");
  }
  std::vector<double> budgets;
  for (const auto& p : curves.front().points) budgets.push_back(p.budget);
  std::sort(budgets.begin(), budgets.end());
  auto revenue_at = [](const CostCurve& c, double b) {
    for (const auto& p : c.points) {
      if (p.budget == b) return p.estimate.per_capita_revenue;
    }
    throw ValidationError("curve lacks budget " + FormatDouble(b));
  };
  std::size_t name_width = 5;
  for (const auto& n : names) name_width = std::max(name_width, n.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_width)) << "Model";
  for (double b : budgets) {
    std::ostringstream hdr;
    hdr << "B=" << std::setprecision(6) << b;
    os << "  " << std::right << std::setw(10) << hdr.str();
  }
  os << "  " << std::right << std::setw(11) << "Improvement" << '\n';
  for (std::size_t k = 0; k < curves.size(); ++k) {
    os << std::left << std::setw(static_cast<int>(name_width)) << names[k];
    double rel = 0.0;
    for (double b : budgets) {
      const double v = revenue_at(curves[k], b);
      const double base = revenue_at(curves.front(), b);
      rel += (v - base) / base;
      os << "  " << std::right << std::setw(10) << std::fixed
         << std::setprecision(4) << v;
    }
    os.unsetf(std::ios::floatfield);
    if (k == 0) {
      os << "  " << std::right << std::setw(11) << "/";
    } else {
      std::ostringstream pct;
      pct << std::fixed << std::setprecision(2)
          << 100.0 * rel / static_cast<double>(budgets.size()) << "%";
      os << "  " << std::right << std::setw(11) << pct.str();
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dfcl

#endif  // DFCL_POLICY_EVALUATION_HPP_
