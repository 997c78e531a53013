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

// Randomized-controlled-trial datasets: storage, CSV io, a synthetic
// generator with full potential outcomes, and random splits.

#ifndef DFCL_RCT_DATA_HPP_
#define DFCL_RCT_DATA_HPP_

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dfcl/common.hpp"
#include "dfcl/config.hpp"

namespace dfcl {

struct RctSample {
  long long id = 0;
  std::vector<double> features;
  int treatment = 0;
  double revenue = 0.0;
  double cost = 0.0;
};

// Ground-truth potential outcomes, N x M. Synthetic data only.
struct CounterfactualMatrix {
  Matrix revenue;
  Matrix cost;

  Eigen::Index rows() const { return revenue.rows(); }
  Eigen::Index cols() const { return revenue.cols(); }
};

// Immutable columnar RCT dataset. Propensities are per treatment; they are
// the empirical shares N_j / N unless supplied explicitly.
class RctDataset {
 public:
  RctDataset() = default;

  RctDataset(std::vector<long long> ids, Matrix features,
             std::vector<int> treatments, Vector revenue, Vector cost,
             int num_treatments,
             std::optional<std::vector<double>> propensities = std::nullopt)
      : ids_(std::move(ids)),
        features_(std::move(features)),
        treatments_(std::move(treatments)),
        revenue_(std::move(revenue)),
        cost_(std::move(cost)),
        num_treatments_(num_treatments),
        explicit_propensity_(propensities.has_value()) {
    const std::size_t n = treatments_.size();
    if (num_treatments_ < 1) {
      throw ValidationError("number of treatments must be positive");
    }
    if (ids_.size() != n || static_cast<std::size_t>(features_.rows()) != n ||
        static_cast<std::size_t>(revenue_.size()) != n ||
        static_cast<std::size_t>(cost_.size()) != n) {
      throw ValidationError("dataset columns have inconsistent lengths");
    }
    counts_.assign(num_treatments_, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int t = treatments_[i];
      if (t < 0 || t >= num_treatments_) {
        throw ValidationError("sample " + std::to_string(ids_[i]) +
                              ": treatment " + std::to_string(t) +
                              " outside [0, " + std::to_string(num_treatments_) +
                              ")");
      }
      if (!std::isfinite(revenue_[i]) || !std::isfinite(cost_[i])) {
        throw ValidationError("sample " + std::to_string(ids_[i]) +
                              ": non-finite outcome");
      }
      ++counts_[t];
    }
    if (!features_.allFinite()) {
      throw ValidationError("non-finite feature value");
    }
    if (explicit_propensity_) {
      propensities_ = *propensities;
      if (propensities_.size() != static_cast<std::size_t>(num_treatments_)) {
        throw ValidationError("propensity vector length differs from M");
      }
      double sum = 0.0;
      for (int j = 0; j < num_treatments_; ++j) {
        if (!(propensities_[j] >= 0.0) || propensities_[j] > 1.0) {
          throw ValidationError("propensity outside [0, 1]");
        }
        if (counts_[j] > 0 && propensities_[j] <= 0.0) {
          throw ValidationError("zero propensity for observed treatment " +
                                std::to_string(j));
        }
        sum += propensities_[j];
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError("propensities must sum to 1");
      }
    } else {
      propensities_.assign(num_treatments_, 0.0);
      if (n > 0) {
        for (int j = 0; j < num_treatments_; ++j) {
          propensities_[j] =
              static_cast<double>(counts_[j]) / static_cast<double>(n);
        }
      }
    }
  }

  std::size_t size() const { return treatments_.size(); }
  bool empty() const { return treatments_.empty(); }
  int num_treatments() const { return num_treatments_; }
  int num_features() const { return static_cast<int>(features_.cols()); }

  const std::vector<long long>& ids() const { return ids_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& treatments() const { return treatments_; }
  const Vector& revenue() const { return revenue_; }
  const Vector& cost() const { return cost_; }

  // N_j per treatment.
  const std::vector<long long>& treatment_counts() const { return counts_; }
  // p_j per treatment.
  const std::vector<double>& propensities() const { return propensities_; }
  bool has_explicit_propensity() const { return explicit_propensity_; }

  int treatment(std::size_t i) const { return treatments_[i]; }
  // p_{t_i}: probability that sample i received the treatment it did.
  double propensity_of(std::size_t i) const {
    return propensities_[treatments_[i]];
  }

  RctSample sample(std::size_t i) const {
    RctSample s;
    s.id = ids_[i];
    s.features.assign(features_.row(i).data(),
                      features_.row(i).data() + features_.cols());
    s.treatment = treatments_[i];
    s.revenue = revenue_[i];
    s.cost = cost_[i];
    return s;
  }

  // Throws unless every treatment has at least one sample. Losses divide by
  // N_j, so loaders call this.
  void RequireAllTreatmentsPresent() const {
    for (int j = 0; j < num_treatments_; ++j) {
      if (counts_[j] == 0) {
        throw ValidationError("treatment " + std::to_string(j) +
                              " has no samples (N_j = 0)");
      }
    }
  }

  // Rows at `indices`, in that order. Empirical propensities are recomputed;
  // explicit ones carry over.
  RctDataset Subset(const std::vector<std::size_t>& indices) const {
    std::vector<long long> ids(indices.size());
    Matrix feats(static_cast<Eigen::Index>(indices.size()), features_.cols());
    std::vector<int> treat(indices.size());
    Vector rev(indices.size()), cst(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const std::size_t i = indices[k];
      ids[k] = ids_[i];
      feats.row(k) = features_.row(i);
      treat[k] = treatments_[i];
      rev[k] = revenue_[i];
      cst[k] = cost_[i];
    }
    std::optional<std::vector<double>> props;
    if (explicit_propensity_) props = propensities_;
    return RctDataset(std::move(ids), std::move(feats), std::move(treat),
                      std::move(rev), std::move(cst), num_treatments_,
                      std::move(props));
  }

  bool operator==(const RctDataset& o) const {
    return ids_ == o.ids_ && features_ == o.features_ &&
           treatments_ == o.treatments_ && revenue_ == o.revenue_ &&
           cost_ == o.cost_ && num_treatments_ == o.num_treatments_ &&
           propensities_ == o.propensities_;
  }

 private:
  std::vector<long long> ids_;
  Matrix features_;
  std::vector<int> treatments_;
  Vector revenue_;
  Vector cost_;
  int num_treatments_ = 0;
  bool explicit_propensity_ = false;
  std::vector<long long> counts_;
  std::vector<double> propensities_;
};

// ---------------------------------------------------------------------------
// CSV

// Column declaration for LoadCsv. Zero / negative values are inferred from
// the file (M = max treatment + 1, d = number of f* columns).
struct CsvSchema {
  int num_treatments = 0;
  int num_features = -1;
};

namespace internal {

inline std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace internal

// Parses `id, f0..f{d-1}, treatment, revenue, cost[, propensity]`. A
// propensity column holds p_{t_i} for each row; it must agree across rows of
// the same treatment.
inline RctDataset ParseCsv(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++line_no;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  auto header = SplitFields(line);
  int id_col = -1, t_col = -1, r_col = -1, c_col = -1, p_col = -1;
  std::vector<int> feature_cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    std::string name(Trim(header[k]));
    if (name == "id") {
      id_col = static_cast<int>(k);
    } else if (name == "treatment") {
      t_col = static_cast<int>(k);
    } else if (name == "revenue") {
      r_col = static_cast<int>(k);
    } else if (name == "cost") {
      c_col = static_cast<int>(k);
    } else if (name == "propensity") {
      p_col = static_cast<int>(k);
    } else if (name.size() > 1 && name[0] == 'f') {
      long long idx;
      if (!ParseInt(std::string_view(name).substr(1), &idx) ||
          idx != static_cast<long long>(feature_cols.size())) {
        throw ParseError(1, "feature columns must be f0..f{d-1} in order, got " +
                                name);
      }
      feature_cols.push_back(static_cast<int>(k));
    } else {
      throw ParseError(1, "unknown column: " + name);
    }
  }
  if (id_col < 0 || t_col < 0 || r_col < 0 || c_col < 0) {
    throw ParseError(1, "header must contain id, treatment, revenue, cost");
  }
  if (schema.num_features >= 0 &&
      static_cast<int>(feature_cols.size()) != schema.num_features) {
    throw ValidationError("expected " + std::to_string(schema.num_features) +
                          " feature columns, found " +
                          std::to_string(feature_cols.size()));
  }
  const std::size_t width = header.size();
  const std::size_t d = feature_cols.size();

  std::vector<long long> ids;
  std::vector<double> feats;
  std::vector<int> treat;
  std::vector<double> rev, cst, prop;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitFields(line);
    if (fields.size() != width) {
      throw ParseError(line_no, "expected " + std::to_string(width) +
                                    " fields, found " +
                                    std::to_string(fields.size()));
    }
    long long id, t;
    if (!ParseInt(fields[id_col], &id)) throw ParseError(line_no, "bad id");
    if (!ParseInt(fields[t_col], &t)) throw ParseError(line_no, "bad treatment");
    double r, c;
    if (!ParseDouble(fields[r_col], &r)) throw ParseError(line_no, "bad revenue");
    if (!ParseDouble(fields[c_col], &c)) throw ParseError(line_no, "bad cost");
    for (int col : feature_cols) {
      double x;
      if (!ParseDouble(fields[col], &x)) {
        throw ParseError(line_no, "bad feature value");
      }
      feats.push_back(x);
    }
    if (p_col >= 0) {
      double p;
      if (!ParseDouble(fields[p_col], &p) || !(p > 0.0) || p > 1.0) {
        throw ParseError(line_no, "propensity must lie in (0, 1]");
      }
      prop.push_back(p);
    }
    if (t < 0) throw ParseError(line_no, "negative treatment index");
    if (schema.num_treatments > 0 && t >= schema.num_treatments) {
      throw ValidationError("line " + std::to_string(line_no) + ": treatment " +
                            std::to_string(t) + " >= declared M=" +
                            std::to_string(schema.num_treatments));
    }
    ids.push_back(id);
    treat.push_back(static_cast<int>(t));
    rev.push_back(r);
    cst.push_back(c);
  }

  int m = schema.num_treatments;
  if (m <= 0) {
    m = treat.empty() ? 1 : *std::max_element(treat.begin(), treat.end()) + 1;
  }
  const std::size_t n = treat.size();
  Matrix features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) features(i, k) = feats[i * d + k];
  }
  std::optional<std::vector<double>> props;
  if (p_col >= 0) {
    std::vector<double> per_treatment(m, 0.0);
    std::vector<bool> seen(m, false);
    for (std::size_t i = 0; i < n; ++i) {
      const int t = treat[i];
      if (!seen[t]) {
        per_treatment[t] = prop[i];
        seen[t] = true;
      } else if (std::abs(per_treatment[t] - prop[i]) > 1e-9) {
        throw ValidationError("propensity differs across rows of treatment " +
                              std::to_string(t));
      }
    }
    props = per_treatment;
  }
  RctDataset ds(std::move(ids), std::move(features), std::move(treat),
                Eigen::Map<Vector>(rev.data(), rev.size()),
                Eigen::Map<Vector>(cst.data(), cst.size()), m, std::move(props));
  ds.RequireAllTreatmentsPresent();
  return ds;
}

inline RctDataset LoadCsv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset: " + path);
  return ParseCsv(in, schema);
}

inline void WriteCsv(std::ostream& out, const RctDataset& data) {
  out << "id";
  for (int k = 0; k < data.num_features(); ++k) out << ",f" << k;
  out << ",treatment,revenue,cost";
  if (data.has_explicit_propensity()) out << ",propensity";
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.ids()[i];
    for (int k = 0; k < data.num_features(); ++k) {
      out << ',' << FormatDouble(data.features()(i, k));
    }
    out << ',' << data.treatment(i) << ',' << FormatDouble(data.revenue()[i])
        << ',' << FormatDouble(data.cost()[i]);
    if (data.has_explicit_propensity()) {
      out << ',' << FormatDouble(data.propensity_of(i));
    }
    out << '\n';
  }
}

// `id, r0..r{M-1}, c0..c{M-1}`.
inline void WriteCounterfactualCsv(std::ostream& out,
                                   const std::vector<long long>& ids,
                                   const CounterfactualMatrix& truth) {
  const auto m = truth.cols();
  out << "id";
  for (Eigen::Index j = 0; j < m; ++j) out << ",r" << j;
  for (Eigen::Index j = 0; j < m; ++j) out << ",c" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    out << ids[i];
    for (Eigen::Index j = 0; j < m; ++j) {
      out << ',' << FormatDouble(truth.revenue(i, j));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      out << ',' << FormatDouble(truth.cost(i, j));
    }
    out << '\n';
  }
}

// Reads the `id, r*, c*` layout shared by counterfactual and prediction
// files. Returns the ids alongside the two matrices.
inline std::pair<std::vector<long long>, CounterfactualMatrix>
ParseOutcomeMatrixCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  auto header = SplitFields(line);
  if (header.size() < 3 || (header.size() - 1) % 2 != 0 ||
      Trim(header[0]) != "id") {
    throw ParseError(1, "expected header id,r0..r{M-1},c0..c{M-1}");
  }
  const std::size_t m = (header.size() - 1) / 2;
  for (std::size_t j = 0; j < m; ++j) {
    if (Trim(header[1 + j]) != "r" + std::to_string(j) ||
        Trim(header[1 + m + j]) != "c" + std::to_string(j)) {
      throw ParseError(1, "expected header id,r0..r{M-1},c0..c{M-1}");
    }
  }
  std::vector<long long> ids;
  std::vector<double> rv, cv;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitFields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "wrong number of fields");
    }
    long long id;
    if (!ParseInt(fields[0], &id)) throw ParseError(line_no, "bad id");
    ids.push_back(id);
    for (std::size_t j = 0; j < m; ++j) {
      double r, c;
      if (!ParseDouble(fields[1 + j], &r) || !ParseDouble(fields[1 + m + j], &c)) {
        throw ParseError(line_no, "bad number");
      }
      rv.push_back(r);
      cv.push_back(c);
    }
  }
  CounterfactualMatrix out;
  const auto n = static_cast<Eigen::Index>(ids.size());
  out.revenue = Eigen::Map<Matrix>(rv.data(), n, static_cast<Eigen::Index>(m));
  out.cost = Eigen::Map<Matrix>(cv.data(), n, static_cast<Eigen::Index>(m));
  return {std::move(ids), std::move(out)};
}

// ---------------------------------------------------------------------------
// Synthetic generator

// Response families:
//   saturating  revenue = base(x) + slope(x) * sat(u_j) (+ noise), cost =
//               rate(x) * u_j * (1 + u_j / 2), where u_j = j / (M - 1) and
//               sat(u) = (1 - e^{-3u}) / (1 - e^{-3}). Slope and rate depend
//               on different features, so ROI is heterogeneous.
//   linear      revenue = 2 + 0.25 j + sum_k w_{jk} x_k (+ noise), cost =
//               max(0, j * (0.5 + 0.1 x_0)). Used for convergence checks.
// Treatment 0 is free in both. Noise is drawn per (i, j) and is part of the
// potential outcome, so the observed value always equals the matrix entry.
struct GeneratorConfig {
  long long n = 1000;
  int m = 5;
  int d = 10;
  double noise = 0.0;
  unsigned long long seed = 0;
  std::string family = "saturating";

  void Validate() const {
    if (n <= 0) throw ConfigError("generator: n must be positive");
    if (m < 2) throw ConfigError("generator: m must be at least 2");
    if (d < 1) throw ConfigError("generator: d must be at least 1");
    if (!(noise >= 0.0)) throw ConfigError("generator: noise must be >= 0");
    if (family != "saturating" && family != "linear") {
      throw ConfigError("generator: unknown family " + family);
    }
  }

  static GeneratorConfig FromConfig(const KeyValueConfig& kv,
                                    const std::string& section = "generate") {
    GeneratorConfig g;
    g.n = kv.GetInt(section, "n", g.n);
    g.m = static_cast<int>(kv.GetInt(section, "m", g.m));
    g.d = static_cast<int>(kv.GetInt(section, "d", g.d));
    g.noise = kv.GetDouble(section, "noise", g.noise);
    g.seed = static_cast<unsigned long long>(kv.GetInt(section, "seed", 0));
    g.family = kv.GetString(section, "family", g.family);
    return g;
  }
};

namespace internal {

inline double Feature(const Matrix& x, Eigen::Index i, int k) {
  return x(i, k % x.cols());
}

inline void FillSaturating(const Matrix& x, double noise, std::mt19937_64& rng,
                           CounterfactualMatrix* truth) {
  const auto n = x.rows();
  const auto m = truth->cols();
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sat_norm = 1.0 - std::exp(-3.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double base = 2.0 + 0.5 * std::tanh(Feature(x, i, 0)) +
                        0.3 * std::sin(Feature(x, i, 1) * Feature(x, i, 2));
    const double slope =
        0.8 * std::exp(0.5 * Feature(x, i, 3) - 0.15 * Feature(x, i, 4) *
                                                    Feature(x, i, 4));
    const double rate = 0.6 * std::exp(0.4 * Feature(x, i, 5));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(m - 1);
      const double sat = (1.0 - std::exp(-3.0 * u)) / sat_norm;
      double r = base + slope * sat;
      if (noise > 0.0) r += noise * gauss(rng);
      truth->revenue(i, j) = std::max(0.0, r);
      truth->cost(i, j) = rate * u * (1.0 + 0.5 * u);
    }
  }
}

inline void FillLinear(const Matrix& x, double noise, std::mt19937_64& rng,
                       CounterfactualMatrix* truth) {
  const auto n = x.rows();
  const auto m = truth->cols();
  const auto d = x.cols();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double r = 2.0 + 0.25 * static_cast<double>(j);
      for (Eigen::Index k = 0; k < d; ++k) {
        // Fixed coefficient pattern in [-0.2, 0.2].
        const double w = 0.2 * std::sin(1.0 + 0.7 * static_cast<double>(k) +
                                        1.3 * static_cast<double>(j));
        r += w * x(i, k);
      }
      if (noise > 0.0) r += noise * gauss(rng);
      truth->revenue(i, j) = std::max(0.0, r);
      truth->cost(i, j) =
          std::max(0.0, static_cast<double>(j) * (0.5 + 0.1 * x(i, 0)));
    }
  }
}

}  // namespace internal

// Observed dataset for a fixed population under a given assignment vector.
inline RctDataset ObserveAssignment(const std::vector<long long>& ids,
                                    const Matrix& features,
                                    const CounterfactualMatrix& truth,
                                    std::vector<int> treatments) {
  const auto n = truth.rows();
  Vector rev(n), cst(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rev[i] = truth.revenue(i, treatments[i]);
    cst[i] = truth.cost(i, treatments[i]);
  }
  return RctDataset(ids, features, std::move(treatments), std::move(rev),
                    std::move(cst), static_cast<int>(truth.cols()));
}

// Redraws a uniform RCT assignment for the population behind `data`.
inline RctDataset ReassignUniform(const RctDataset& data,
                                  const CounterfactualMatrix& truth,
                                  std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, data.num_treatments() - 1);
  std::vector<int> t(data.size());
  for (auto& v : t) v = pick(rng);
  return ObserveAssignment(data.ids(), data.features(), truth, std::move(t));
}

struct SyntheticData {
  RctDataset data;
  CounterfactualMatrix truth;
};

inline SyntheticData GenerateSynthetic(const GeneratorConfig& config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(config.n);
  Matrix x(n, config.d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < config.d; ++k) x(i, k) = gauss(rng);
  }
  CounterfactualMatrix truth{Matrix(n, config.m), Matrix(n, config.m)};
  if (config.family == "linear") {
    internal::FillLinear(x, config.noise, rng, &truth);
  } else {
    internal::FillSaturating(x, config.noise, rng, &truth);
  }
  std::uniform_int_distribution<int> pick(0, config.m - 1);
  std::vector<int> t(n);
  for (auto& v : t) v = pick(rng);
  std::vector<long long> ids(n);
  std::iota(ids.begin(), ids.end(), 0LL);
  RctDataset data = ObserveAssignment(ids, x, truth, std::move(t));
  return {std::move(data), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitResult {
  std::vector<std::size_t> first_indices;
  std::vector<std::size_t> second_indices;
  RctDataset first;
  RctDataset second;
};

// Random disjoint partition; round(fraction * N) rows go to the first part.
inline SplitResult Split(const RctDataset& data, double fraction,
                         unsigned long long seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 0.5));
  if (k == 0 || k == n) {
    throw ValidationError("split leaves an empty part");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitResult out;
  out.first_indices.assign(order.begin(), order.begin() + k);
  out.second_indices.assign(order.begin() + k, order.end());
  std::sort(out.first_indices.begin(), out.first_indices.end());
  std::sort(out.second_indices.begin(), out.second_indices.end());
  out.first = data.Subset(out.first_indices);
  out.second = data.Subset(out.second_indices);
  return out;
}

inline CounterfactualMatrix SubsetRows(const CounterfactualMatrix& truth,
                                       const std::vector<std::size_t>& rows) {
  CounterfactualMatrix out{Matrix(rows.size(), truth.cols()),
                           Matrix(rows.size(), truth.cols())};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.revenue.row(k) = truth.revenue.row(rows[k]);
    out.cost.row(k) = truth.cost.row(rows[k]);
  }
  return out;
}

}  // namespace dfcl

#endif  // DFCL_RCT_DATA_HPP_
