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

// Multi-treatment budget allocation: pick one treatment per individual to
// maximize total revenue subject to total cost <= B. Solved through the
// Lagrangian dual, where a fixed multiplier decouples individuals:
//
//   choice_i(lambda) = argmax_j  r_ij - lambda * c_ij
//   G(lambda)        = lambda * B + sum_i max_j (r_ij - lambda * c_ij)
//
// Total cost of choice(lambda) is nonincreasing in lambda, so the budget is
// met by bisection on lambda.

#ifndef DFCL_ALLOCATION_SOLVER_HPP_
#define DFCL_ALLOCATION_SOLVER_HPP_

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dfcl/common.hpp"

namespace dfcl {

// Predicted (or ground-truth) revenue and cost for every individual and
// treatment.
struct PredictionMatrix {
  Matrix revenue;
  Matrix cost;

  Eigen::Index rows() const { return revenue.rows(); }
  Eigen::Index cols() const { return revenue.cols(); }

  void Validate() const {
    if (revenue.rows() != cost.rows() || revenue.cols() != cost.cols()) {
      throw ValidationError("revenue and cost predictions differ in shape");
    }
    if (!revenue.allFinite() || !cost.allFinite()) {
      throw ValidationError("predictions contain non-finite entries");
    }
  }
};

struct Allocation {
  std::vector<int> choice;
  double objective = 0.0;
  double total_cost = 0.0;
};

struct DualSolution {
  double lambda = 0.0;
  Allocation allocation;
  double dual_value = 0.0;
  int iterations = 0;
};

// One row of the bisection trace.
struct SolverTraceEntry {
  int iteration = 0;
  double lambda = 0.0;
  double total_cost = 0.0;
};

struct SolverOptions {
  // Accept once budget - cost < eps * N. Zero selects 1e-6 times the mean
  // absolute predicted cost.
  double eps = 0.0;
  int max_iter = 100;
  std::vector<SolverTraceEntry>* trace = nullptr;
};

namespace internal {
// Enough halvings to cross the whole double exponent range.
inline constexpr int kMaxHalvings = 2100;
}  // namespace internal

// Row argmax of r - lambda * c; the lowest index wins ties.
inline int ArgmaxScore(const double* r, const double* c, Eigen::Index m,
                       double lambda) {
  int best = 0;
  double best_score = r[0] - lambda * c[0];
  for (Eigen::Index j = 1; j < m; ++j) {
    const double s = r[j] - lambda * c[j];
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Sums revenue and cost of `choice` in index order.
inline Allocation EvaluateAllocation(const PredictionMatrix& pred,
                                     std::vector<int> choice) {
  Allocation a;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    a.objective += pred.revenue(i, choice[i]);
    a.total_cost += pred.cost(i, choice[i]);
  }
  a.choice = std::move(choice);
  return a;
}

inline Allocation DecideDual(const PredictionMatrix& pred, double lambda) {
  pred.Validate();
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const auto n = pred.rows();
  const auto m = pred.cols();
  std::vector<int> choice(n, 0);
  if (m > 0) {
    ParallelFor(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        choice[i] = ArgmaxScore(pred.revenue.row(i).data(),
                                pred.cost.row(i).data(), m, lambda);
      }
    });
  }
  return EvaluateAllocation(pred, std::move(choice));
}

inline double DualValue(const PredictionMatrix& pred, double lambda,
                        double budget) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  double value = lambda * budget;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      best = std::max(best, pred.revenue(i, j) - lambda * pred.cost(i, j));
    }
    value += best;
  }
  return value;
}

// max r/c over entries with c > 0; 1 when no cost is positive.
inline double InitialLambdaMax(const PredictionMatrix& pred) {
  double hi = 0.0;
  bool any = false;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const double c = pred.cost(i, j);
      if (c > 0.0) {
        const double ratio = pred.revenue(i, j) / c;
        if (!any || ratio > hi) hi = ratio;
        any = true;
      }
    }
  }
  if (!any || !(hi > 0.0)) return 1.0;
  return hi;
}

// Smallest multiplier (found by bisection) whose allocation costs at most
// `budget`. Never overspends.
inline DualSolution SolveBudget(const PredictionMatrix& pred, double budget,
                                const SolverOptions& options = {}) {
  pred.Validate();
  if (!(budget >= 0.0)) throw ConfigError("budget must be >= 0");
  const auto n = static_cast<double>(pred.rows());
  double eps = options.eps;
  if (eps < 0.0) throw ConfigError("eps must be positive");
  if (eps == 0.0) {
    const double scale = pred.rows() > 0 ? pred.cost.cwiseAbs().mean() : 0.0;
    eps = 1e-6 * (scale > 0.0 ? scale : 1.0);
  }
  auto record = [&](int it, double lambda, const Allocation& a) {
    if (options.trace) options.trace->push_back({it, lambda, a.total_cost});
  };

  DualSolution out;
  Allocation at_zero = DecideDual(pred, 0.0);
  record(0, 0.0, at_zero);
  if (at_zero.total_cost <= budget) {
    out.lambda = 0.0;
    out.allocation = std::move(at_zero);
    out.dual_value = DualValue(pred, 0.0, budget);
    return out;
  }

  // Upper end: the largest-ratio heuristic, doubled until feasible.
  double hi = InitialLambdaMax(pred);
  Allocation hi_alloc = DecideDual(pred, hi);
  int iter = 1;
  record(iter, hi, hi_alloc);
  for (int k = 0; k < 64 && hi_alloc.total_cost > budget; ++k) {
    hi *= 2.0;
    hi_alloc = DecideDual(pred, hi);
    record(++iter, hi, hi_alloc);
  }
  if (hi_alloc.total_cost > budget) {
    throw InfeasibleError("budget " + FormatDouble(budget) +
                              " is below the minimum achievable cost " +
                              FormatDouble(hi_alloc.total_cost),
                          hi_alloc.total_cost);
  }

  // Halve while still feasible so that the bisection below starts from a
  // bracket within a factor of two; tiny predicted costs can put the initial
  // upper end hundreds of orders of magnitude above the answer.
  double lo = 0.0;
  for (int k = 0; k < internal::kMaxHalvings && hi > 0.0; ++k) {
    if (budget - hi_alloc.total_cost < eps * n) break;
    Allocation a = DecideDual(pred, 0.5 * hi);
    record(++iter, 0.5 * hi, a);
    if (a.total_cost > budget) {
      lo = 0.5 * hi;
      break;
    }
    hi *= 0.5;
    hi_alloc = std::move(a);
  }
  for (int it = 0; it < options.max_iter; ++it) {
    if (budget - hi_alloc.total_cost < eps * n) break;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    Allocation a = DecideDual(pred, mid);
    record(++iter, mid, a);
    if (a.total_cost <= budget) {
      hi = mid;
      hi_alloc = std::move(a);
    } else {
      lo = mid;
    }
  }
  out.lambda = hi;
  out.allocation = std::move(hi_alloc);
  out.dual_value = DualValue(pred, hi, budget);
  out.iterations = iter;
  return out;
}

// Exact optimum by enumerating all M^N assignments. Test oracle for small
// instances.
inline Allocation BruteForceOracle(const Matrix& revenue, const Matrix& cost,
                                   double budget) {
  const auto n = revenue.rows();
  const auto m = revenue.cols();
  if (cost.rows() != n || cost.cols() != m) {
    throw ValidationError("revenue and cost differ in shape");
  }
  if (n == 0) return Allocation{};
  if (n > 15) throw SizeError("brute force limited to N <= 15");
  double combos = std::pow(static_cast<double>(m), static_cast<double>(n));
  if (combos > 5e7) throw SizeError("brute force limited to M^N <= 5e7");

  PredictionMatrix pm{revenue, cost};
  std::vector<int> z(n, 0);
  std::vector<int> best;
  double best_obj = -std::numeric_limits<double>::infinity();
  while (true) {
    double obj = 0.0, cst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      obj += revenue(i, z[i]);
      cst += cost(i, z[i]);
    }
    if (cst <= budget && obj > best_obj) {
      best_obj = obj;
      best = z;
    }
    Eigen::Index pos = 0;
    while (pos < n && ++z[pos] == m) z[pos++] = 0;
    if (pos == n) break;
  }
  if (best.empty()) {
    throw InfeasibleError("no assignment satisfies the budget",
                          cost.rowwise().minCoeff().sum());
  }
  return EvaluateAllocation(pm, std::move(best));
}

// `id, choice`.
inline void WriteAllocationCsv(std::ostream& out,
                               const std::vector<long long>& ids,
                               const Allocation& alloc) {
  out << "id,choice\n";
  for (std::size_t i = 0; i < alloc.choice.size(); ++i) {
    out << ids[i] << ',' << alloc.choice[i] << '\n';
  }
}

inline void WriteSolverTrace(std::ostream& out,
                             const std::vector<SolverTraceEntry>& trace) {
  for (const auto& t : trace) {
    out << "iter=" << t.iteration << " lambda=" << FormatDouble(t.lambda)
        << " cost=" << FormatDouble(t.total_cost) << '\n';
  }
}

}  // namespace dfcl

#endif  // DFCL_ALLOCATION_SOLVER_HPP_
