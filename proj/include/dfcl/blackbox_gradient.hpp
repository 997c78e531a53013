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

// Perturbation gradients of the EOM dual decision loss
//
//   L(lambda) = -(rbar(lambda) - lambda * cbar(lambda)),
//   rbar = (1/N) sum_i r_i / p_{t_i} * [t_i == argmax_j (r^_ij - lambda c^_ij)]
//
// The loss is piecewise constant in the predictions. Because the argmax
// decouples per individual, the smallest score change that moves a sample
// into or out of the matching set is available in closed form, and the
// resulting loss change only involves that sample. The improved estimator
// divides that change by the step; the naive estimator re-evaluates the full
// loss per perturbed entry and serves as its reference.

#ifndef DFCL_BLACKBOX_GRADIENT_HPP_
#define DFCL_BLACKBOX_GRADIENT_HPP_

#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "dfcl/allocation_solver.hpp"
#include "dfcl/common.hpp"
#include "dfcl/rct_data.hpp"
#include "dfcl/surrogate_losses.hpp"

namespace dfcl {

struct GradientOptions {
  // |step| is floored here before division; near ties would otherwise give
  // unbounded quotients.
  double step_floor = 1e-6;
  // |step| is truncated here. Infinite by default.
  double step_cap = std::numeric_limits<double>::infinity();
};

struct GradientDiagnostics {
  // Cost-gradient entries left at zero because lambda == 0.
  long long skipped_cost_entries = 0;
  long long floored_steps = 0;
  long long capped_steps = 0;
};

// Single-multiplier EOM dual decision loss, divided by N.
inline double EomDualLoss(const RctDataset& data, const PredictionMatrix& pred,
                          double lambda) {
  internal::CheckShapes(data, pred);
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n == 0) return 0.0;
  const auto m = pred.cols();
  double rbar = 0.0, cbar = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = ArgmaxScore(pred.revenue.row(i).data(),
                              pred.cost.row(i).data(), m, lambda);
    if (k == data.treatment(i)) {
      const double w = 1.0 / data.propensity_of(i);
      rbar += w * data.revenue()[i];
      cbar += w * data.cost()[i];
    }
  }
  const double nd = static_cast<double>(n);
  return -(rbar / nd - lambda * (cbar / nd));
}

inline double EomDualLoss(const RctDataset& data, const PredictionMatrix& pred,
                          const LambdaGrid& grid) {
  double total = 0.0;
  for (double lambda : grid) total += EomDualLoss(data, pred, lambda);
  return total;
}

namespace internal {

struct StepCounters {
  long long floored = 0;
  long long capped = 0;
};

// Applies floor and cap to |h|, keeping the intended direction.
inline double BoundStep(double h, double direction, const GradientOptions& opt,
                        StepCounters* counters) {
  double mag = std::abs(h);
  if (mag < opt.step_floor) {
    mag = opt.step_floor;
    ++counters->floored;
  } else if (mag > opt.step_cap) {
    mag = opt.step_cap;
    ++counters->capped;
  }
  return direction < 0.0 ? -mag : mag;
}

// Flip-step gradients of one sample at one multiplier.
//
// a: scores of the row; t: observed treatment; delta: (r - lambda c) /
// (N p_t), the amount the sample contributes to rbar - lambda cbar while
// matched. Writes d loss / d a into g_score. When `with_cost`, also writes
// d loss / d c^ (the c^ step is the score step scaled by -1/lambda).
inline void FlipGradientRow(const double* a, Eigen::Index m, int t,
                            double delta, double lambda, bool with_cost,
                            const GradientOptions& opt, StepCounters* counters,
                            double* g_score, double* g_cost) {
  if (m < 2 || delta == 0.0) return;
  int k = 0;
  for (Eigen::Index j = 1; j < m; ++j) {
    if (a[j] > a[k]) k = static_cast<int>(j);
  }
  auto add = [&](Eigen::Index j, double score_step, double dloss) {
    const double hr = BoundStep(score_step, score_step >= 0.0 ? 1.0 : -1.0,
                                opt, counters);
    g_score[j] += dloss / hr;
    if (with_cost) {
      // Moving c^ by h shifts the score by -lambda h.
      const double raw = -score_step / lambda;
      const double hc = BoundStep(raw, -score_step >= 0.0 ? 1.0 : -1.0, opt,
                                  counters);
      g_cost[j] += dloss / hc;
    }
  };

  if (k == t) {
    // Matched: any flip removes the sample from the matching set.
    double second = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != t) second = std::max(second, a[j]);
    }
    const double dloss = delta;
    add(t, second - a[t], dloss);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != t) add(j, a[t] - a[j], dloss);
    }
  } else {
    // Unmatched: raising t to the top, or dropping the current winner k
    // below t when t is the runner-up, brings the sample into the set.
    const double dloss = -delta;
    add(t, a[k] - a[t], dloss);
    int runner = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == k) continue;
      if (runner < 0 || a[j] > a[runner]) runner = static_cast<int>(j);
    }
    if (runner == t) add(k, a[t] - a[k], dloss);
  }
}

}  // namespace internal

// Improved (Lagrangian-duality) gradient of sum_lambda EomDualLoss with
// respect to r^ and c^.
inline GradientPair ImprovedGradient(const RctDataset& data,
                                     const PredictionMatrix& pred,
                                     const LambdaGrid& grid,
                                     const GradientOptions& options = {},
                                     GradientDiagnostics* diagnostics = nullptr) {
  internal::CheckShapes(data, pred);
  if (grid.size() == 0) throw ConfigError("lambda grid must be nonempty");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = pred.cols();
  GradientPair grad = GradientPair::Zero(n, m);
  if (n == 0) return grad;
  const double nd = static_cast<double>(n);
  std::atomic<long long> floored{0}, capped{0};
  ParallelFor(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
    std::vector<double> a(m);
    internal::StepCounters counters;
    for (std::size_t i = b; i < e; ++i) {
      const double* r = pred.revenue.row(i).data();
      const double* c = pred.cost.row(i).data();
      double* gr = grad.d_revenue.row(i).data();
      double* gc = grad.d_cost.row(i).data();
      const int t = data.treatment(i);
      const double weight = 1.0 / (nd * data.propensity_of(i));
      for (double lambda : grid) {
        for (Eigen::Index j = 0; j < m; ++j) a[j] = r[j] - lambda * c[j];
        const double delta =
            weight * (data.revenue()[i] - lambda * data.cost()[i]);
        internal::FlipGradientRow(a.data(), m, t, delta, lambda, lambda > 0.0,
                                  options, &counters, gr, gc);
      }
    }
    floored += counters.floored;
    capped += counters.capped;
  });
  if (diagnostics) {
    long long zero_lambdas = 0;
    for (double lambda : grid) zero_lambdas += (lambda == 0.0);
    diagnostics->skipped_cost_entries = zero_lambdas * n * m;
    diagnostics->floored_steps = floored.load();
    diagnostics->capped_steps = capped.load();
  }
  return grad;
}

// Step rule of the naive estimator.
struct FiniteDifferenceStep {
  enum class Kind { kFixed, kFlipAware };
  Kind kind = Kind::kFixed;
  double h = 1e-6;  // kFixed only

  static FiniteDifferenceStep Fixed(double h) { return {Kind::kFixed, h}; }
  static FiniteDifferenceStep FlipAware() { return {Kind::kFlipAware, 0.0}; }
};

// Reference estimator: perturbs each entry of r^ and c^ in turn and
// re-evaluates the full loss. O(N^2 M^2 |grid|); capped at N * M <= 20000.
//
// kFixed:     (L(x + h e_ij) - L(x)) / h with one h for every entry, summed
//             over the grid.
// kFlipAware: per multiplier and entry, the signed smallest step that changes
//             that row's argmax (pushing a non-winner to the top, or the
//             winner below the runner-up), taken with a tiny overshoot; the
//             loss change is divided by the nominal step after the same
//             floor/cap as the improved estimator. Cost entries at lambda = 0
//             cannot move the argmax and are left at zero.
inline GradientPair NaiveFdGradient(const RctDataset& data,
                                    const PredictionMatrix& pred,
                                    const LambdaGrid& grid,
                                    const FiniteDifferenceStep& step,
                                    const GradientOptions& options = {}) {
  internal::CheckShapes(data, pred);
  const auto n = pred.rows();
  const auto m = pred.cols();
  if (n * m > 20000) throw SizeError("naive finite differences capped at N*M <= 20000");
  GradientPair grad = GradientPair::Zero(n, m);
  PredictionMatrix work = pred;

  if (step.kind == FiniteDifferenceStep::Kind::kFixed) {
    if (!(step.h > 0.0)) throw ConfigError("finite-difference step must be > 0");
    const double base = EomDualLoss(data, pred, grid);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        work.revenue(i, j) = pred.revenue(i, j) + step.h;
        grad.d_revenue(i, j) = (EomDualLoss(data, work, grid) - base) / step.h;
        work.revenue(i, j) = pred.revenue(i, j);
        work.cost(i, j) = pred.cost(i, j) + step.h;
        grad.d_cost(i, j) = (EomDualLoss(data, work, grid) - base) / step.h;
        work.cost(i, j) = pred.cost(i, j);
      }
    }
    return grad;
  }

  internal::StepCounters counters;
  auto nominal = [&](double h) {
    return internal::BoundStep(h, h >= 0.0 ? 1.0 : -1.0, options, &counters);
  };
  auto overshoot = [](double h) {
    const double extra = 1e-9 * std::max(1.0, std::abs(h));
    return h >= 0.0 ? h + extra : h - extra;
  };
  for (double lambda : grid) {
    const double base = EomDualLoss(data, pred, lambda);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> a(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        a[j] = pred.revenue(i, j) - lambda * pred.cost(i, j);
      }
      const int k = ArgmaxScore(pred.revenue.row(i).data(),
                                pred.cost.row(i).data(), m, lambda);
      for (Eigen::Index j = 0; j < m; ++j) {
        double score_step;
        if (j == k) {
          double second = -std::numeric_limits<double>::infinity();
          for (Eigen::Index l = 0; l < m; ++l) {
            if (l != k) second = std::max(second, a[l]);
          }
          if (m < 2) continue;
          score_step = second - a[k];
        } else {
          score_step = a[k] - a[j];
        }
        const double hr = nominal(score_step);
        work.revenue(i, j) = pred.revenue(i, j) + overshoot(hr);
        grad.d_revenue(i, j) += (EomDualLoss(data, work, lambda) - base) / hr;
        work.revenue(i, j) = pred.revenue(i, j);
        if (lambda > 0.0) {
          const double hc = nominal(-score_step / lambda);
          work.cost(i, j) = pred.cost(i, j) + overshoot(hc);
          grad.d_cost(i, j) += (EomDualLoss(data, work, lambda) - base) / hc;
          work.cost(i, j) = pred.cost(i, j);
        }
      }
    }
  }
  return grad;
}

// sum_ij g^r_ij r^_ij + g^c_ij c^_ij with the gradient treated as a constant,
// so d/d(pred) of this value is exactly `grad`.
inline double IfdlLoss(const PredictionMatrix& pred, const GradientPair& grad) {
  if (grad.d_revenue.rows() != pred.rows() ||
      grad.d_revenue.cols() != pred.cols() ||
      grad.d_cost.rows() != pred.rows() || grad.d_cost.cols() != pred.cols()) {
    throw ValidationError("gradient and prediction shapes differ");
  }
  return grad.d_revenue.cwiseProduct(pred.revenue).sum() +
         grad.d_cost.cwiseProduct(pred.cost).sum();
}

struct SoftmaxIfdResult {
  double loss = 0.0;      // sum_lambda sum_ij (dL/da_ij) a_ij
  GradientPair gradient;  // chain rule through the row softmax to r^, c^
};

// Flip-step analysis on the row-softmax scores a = softmax(r^ - lambda c^):
// only a is perturbed. The loss is linear in a with the perturbation
// gradients held fixed; its gradient flows back through the softmax.
inline SoftmaxIfdResult IfdlSoftmax(const RctDataset& data,
                                    const PredictionMatrix& pred,
                                    const LambdaGrid& grid,
                                    const GradientOptions& options = {},
                                    GradientDiagnostics* diagnostics = nullptr) {
  internal::CheckShapes(data, pred);
  if (grid.size() == 0) throw ConfigError("lambda grid must be nonempty");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = pred.cols();
  SoftmaxIfdResult out;
  out.gradient = GradientPair::Zero(n, m);
  if (n == 0) return out;
  const double nd = static_cast<double>(n);
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
  std::atomic<long long> floored{0}, capped{0};
  ParallelFor(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
    std::vector<double> a(m), ga(m);
    internal::StepCounters counters;
    for (std::size_t i = b; i < e; ++i) {
      const double* r = pred.revenue.row(i).data();
      const double* c = pred.cost.row(i).data();
      const int t = data.treatment(i);
      const double weight = 1.0 / (nd * data.propensity_of(i));
      double value = 0.0;
      for (double lambda : grid) {
        internal::RowSoftmax(r, c, m, lambda, 1.0, a.data());
        std::fill(ga.begin(), ga.end(), 0.0);
        const double delta =
            weight * (data.revenue()[i] - lambda * data.cost()[i]);
        internal::FlipGradientRow(a.data(), m, t, delta, lambda, false, options,
                                  &counters, ga.data(), nullptr);
        double dot = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) dot += ga[j] * a[j];
        value += dot;
        // d/ds_j of sum_l ga_l a_l = a_j (ga_j - dot).
        for (Eigen::Index j = 0; j < m; ++j) {
          const double gs = a[j] * (ga[j] - dot);
          out.gradient.d_revenue(i, j) += gs;
          out.gradient.d_cost(i, j) -= lambda * gs;
        }
      }
      partial[i] = value;
    }
    floored += counters.floored;
    capped += counters.capped;
  });
  for (double v : partial) out.loss += v;
  if (diagnostics) {
    diagnostics->floored_steps = floored.load();
    diagnostics->capped_steps = capped.load();
  }
  return out;
}

// Debug dump: `id, dr0..dr{M-1}, dc0..dc{M-1}`.
inline void WriteGradientCsv(std::ostream& out, const std::vector<long long>& ids,
                             const GradientPair& grad) {
  const auto m = grad.d_revenue.cols();
  out << "id";
  for (Eigen::Index j = 0; j < m; ++j) out << ",dr" << j;
  for (Eigen::Index j = 0; j < m; ++j) out << ",dc" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < grad.d_revenue.rows(); ++i) {
    out << ids[i];
    for (Eigen::Index j = 0; j < m; ++j) {
      out << ',' << FormatDouble(grad.d_revenue(i, j));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      out << ',' << FormatDouble(grad.d_cost(i, j));
    }
    out << '\n';
  }
}

}  // namespace dfcl

#endif  // DFCL_BLACKBOX_GRADIENT_HPP_
