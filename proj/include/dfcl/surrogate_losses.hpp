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

// Losses computed from RCT observations: the inverse-propensity prediction
// loss and the softmax-policy decision surrogates, plus full-information
// counterparts that need the counterfactual matrix (verification only).
//
// Every inverse-propensity weight is 1 / p_{t_i}, which equals N / N_{t_i}
// under empirical propensities. Decision surrogates are divided by N.

#ifndef DFCL_SURROGATE_LOSSES_HPP_
#define DFCL_SURROGATE_LOSSES_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include "dfcl/allocation_solver.hpp"
#include "dfcl/common.hpp"
#include "dfcl/rct_data.hpp"

namespace dfcl {

// d loss / d prediction, one N x M matrix per head.
struct GradientPair {
  Matrix d_revenue;
  Matrix d_cost;

  static GradientPair Zero(Eigen::Index n, Eigen::Index m) {
    return {Matrix::Zero(n, m), Matrix::Zero(n, m)};
  }

  GradientPair& operator+=(const GradientPair& o) {
    d_revenue += o.d_revenue;
    d_cost += o.d_cost;
    return *this;
  }

  GradientPair& operator*=(double s) {
    d_revenue *= s;
    d_cost *= s;
    return *this;
  }
};

// Discretized Lagrange multipliers: nonempty, strictly increasing, >= 0.
class LambdaGrid {
 public:
  LambdaGrid() = default;
  explicit LambdaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ConfigError("lambda grid must be nonempty");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!(values_[k] >= 0.0) || !std::isfinite(values_[k])) {
        throw ConfigError("lambda grid values must be finite and >= 0");
      }
      if (k > 0 && !(values_[k] > values_[k - 1])) {
        throw ConfigError("lambda grid must be strictly increasing");
      }
    }
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::vector<double> values_;
};

struct LossBreakdown {
  double prediction = 0.0;
  double decision = 0.0;
  double total = 0.0;
  double alpha = 1.0;

  static LossBreakdown Combine(double alpha, double prediction,
                               double decision) {
    return {prediction, decision, alpha * prediction + decision, alpha};
  }
};

namespace internal {

inline void CheckShapes(const RctDataset& data, const PredictionMatrix& pred) {
  if (static_cast<std::size_t>(pred.rows()) != data.size() ||
      pred.cols() != data.num_treatments() ||
      pred.cost.rows() != pred.rows() || pred.cost.cols() != pred.cols()) {
    throw ValidationError("prediction matrix shape does not match dataset");
  }
}

inline void CheckShapes(const CounterfactualMatrix& truth,
                        const PredictionMatrix& pred) {
  if (truth.revenue.rows() != pred.rows() || truth.revenue.cols() != pred.cols() ||
      truth.cost.rows() != pred.rows() || truth.cost.cols() != pred.cols() ||
      pred.cost.rows() != pred.rows() || pred.cost.cols() != pred.cols()) {
    throw ValidationError("counterfactual and prediction shapes differ");
  }
}

// Row softmax of (r - lambda c) / tau with the row maximum subtracted.
inline void RowSoftmax(const double* r, const double* c, Eigen::Index m,
                       double lambda, double tau, double* out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) {
    out[j] = (r[j] - lambda * c[j]) / tau;
    mx = std::max(mx, out[j]);
  }
  double z = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    out[j] = std::exp(out[j] - mx);
    z += out[j];
  }
  for (Eigen::Index j = 0; j < m; ++j) out[j] /= z;
}

// Shared kernel of the policy-learning and maximum-entropy losses.
inline double SoftmaxPolicyLoss(const RctDataset& data,
                                const PredictionMatrix& pred,
                                const LambdaGrid& grid, double tau,
                                GradientPair* grad) {
  CheckShapes(data, pred);
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = pred.cols();
  if (grad) *grad = GradientPair::Zero(n, m);
  if (n == 0) return 0.0;
  const double nd = static_cast<double>(n);
  std::vector<double> q(m);
  double loss = 0.0;
  for (double lambda : grid) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const int t = data.treatment(i);
      RowSoftmax(pred.revenue.row(i).data(), pred.cost.row(i).data(), m, lambda,
                 tau, q.data());
      const double reward = data.revenue()[i] - lambda * data.cost()[i];
      const double coef = -reward / (nd * data.propensity_of(i));
      loss += coef * q[t];
      if (grad) {
        for (Eigen::Index j = 0; j < m; ++j) {
          const double ds =
              coef * q[t] * ((j == t ? 1.0 : 0.0) - q[j]) / tau;
          grad->d_revenue(i, j) += ds;
          grad->d_cost(i, j) -= lambda * ds;
        }
      }
    }
  }
  return loss;
}

}  // namespace internal

// (1/M) sum_i 1/(N p_{t_i}) [(r - r^)^2 + (c - c^)^2] over observed entries.
inline double PredictionLoss(const RctDataset& data,
                             const PredictionMatrix& pred,
                             GradientPair* grad = nullptr) {
  internal::CheckShapes(data, pred);
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = pred.cols();
  if (grad) *grad = GradientPair::Zero(n, m);
  const double nd = static_cast<double>(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = data.treatment(i);
    const double w = inv_m / (nd * data.propensity_of(i));
    const double er = data.revenue()[i] - pred.revenue(i, t);
    const double ec = data.cost()[i] - pred.cost(i, t);
    loss += w * (er * er + ec * ec);
    if (grad) {
      grad->d_revenue(i, t) = -2.0 * w * er;
      grad->d_cost(i, t) = -2.0 * w * ec;
    }
  }
  return loss;
}

// Full-information mean squared error over all N x M entries.
inline double MseFull(const CounterfactualMatrix& truth,
                      const PredictionMatrix& pred) {
  internal::CheckShapes(truth, pred);
  const double count = static_cast<double>(pred.rows() * pred.cols());
  if (count == 0) return 0.0;
  return ((truth.revenue - pred.revenue).squaredNorm() +
          (truth.cost - pred.cost).squaredNorm()) /
         count;
}

// -(1/N) sum_lambda sum_i (r - lambda c) / p_{t_i} * softmax_{t_i}(r^ - lambda c^).
inline double PolicyLearningLoss(const RctDataset& data,
                                 const PredictionMatrix& pred,
                                 const LambdaGrid& grid,
                                 GradientPair* grad = nullptr) {
  return internal::SoftmaxPolicyLoss(data, pred, grid, 1.0, grad);
}

// Policy-learning loss with a temperature-tau softmax.
inline double MaxEntropyLoss(const RctDataset& data,
                             const PredictionMatrix& pred,
                             const LambdaGrid& grid, double tau,
                             GradientPair* grad = nullptr) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("temperature tau must be positive");
  }
  return internal::SoftmaxPolicyLoss(data, pred, grid, tau, grad);
}

struct FullInfoDualLosses {
  double hard = 0.0;         // argmax allocation
  double softmax = 0.0;      // softmax-smoothed
  double temperature = 0.0;  // temperature-tau smoothed
};

// Dual decision losses evaluated with ground-truth r, c over every treatment,
// each divided by N.
inline FullInfoDualLosses FullInfoDualLossesOf(const CounterfactualMatrix& truth,
                                               const PredictionMatrix& pred,
                                               const LambdaGrid& grid,
                                               double tau) {
  internal::CheckShapes(truth, pred);
  if (!(tau > 0.0)) throw ConfigError("temperature tau must be positive");
  const auto n = pred.rows();
  const auto m = pred.cols();
  FullInfoDualLosses out;
  if (n == 0) return out;
  std::vector<double> q1(m), qt(m);
  for (double lambda : grid) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* rh = pred.revenue.row(i).data();
      const double* ch = pred.cost.row(i).data();
      const int k = ArgmaxScore(rh, ch, m, lambda);
      internal::RowSoftmax(rh, ch, m, lambda, 1.0, q1.data());
      internal::RowSoftmax(rh, ch, m, lambda, tau, qt.data());
      out.hard -= truth.revenue(i, k) - lambda * truth.cost(i, k);
      for (Eigen::Index j = 0; j < m; ++j) {
        const double reward = truth.revenue(i, j) - lambda * truth.cost(i, j);
        out.softmax -= reward * q1[j];
        out.temperature -= reward * qt[j];
      }
    }
  }
  const double nd = static_cast<double>(n);
  out.hard /= nd;
  out.softmax /= nd;
  out.temperature /= nd;
  return out;
}

}  // namespace dfcl

#endif  // DFCL_SURROGATE_LOSSES_HPP_
