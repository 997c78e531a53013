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

// Multi-head MLP predicting revenue and cost for every treatment, with an
// explicit reverse pass and an Adam optimizer.
//
// Output layout: 2M columns, revenue heads 0..M-1 then cost heads M..2M-1.

#ifndef DFCL_PREDICTOR_HPP_
#define DFCL_PREDICTOR_HPP_

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dfcl/allocation_solver.hpp"
#include "dfcl/common.hpp"
#include "dfcl/rct_data.hpp"
#include "dfcl/surrogate_losses.hpp"

namespace dfcl {

enum class Activation { kRelu = 0, kTanh = 1 };
enum class OutputTransform { kIdentity = 0, kLogistic = 1 };

inline Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation: " + name);
}

inline const char* ActivationName(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

struct ModelConfig {
  std::vector<int> layer_widths = {64, 32, 32};  // hidden layers
  int num_treatments = 5;
  int input_dim = 1;
  Activation activation = Activation::kRelu;
  OutputTransform output = OutputTransform::kIdentity;
  unsigned long long seed = 0;

  int output_dim() const { return 2 * num_treatments; }

  void Validate() const {
    if (num_treatments < 1) throw ConfigError("model: num_treatments must be >= 1");
    if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
    for (int w : layer_widths) {
      if (w < 1) throw ConfigError("model: layer widths must be >= 1");
    }
  }
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  std::size_t num_params() const {
    return static_cast<std::size_t>(weight.size() + bias.size());
  }
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
};

// Weights, biases, and optimizer state of the model.
struct ModelParams {
  ModelConfig config;
  std::vector<DenseLayer> layers;
  AdamState adam;

  std::size_t num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.num_params();
    return n;
  }
};

using ParamGradients = std::vector<DenseLayer>;

namespace internal {

inline std::vector<DenseLayer> ZerosLike(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out[l].weight = Eigen::MatrixXd::Zero(layers[l].weight.rows(),
                                          layers[l].weight.cols());
    out[l].bias = Eigen::VectorXd::Zero(layers[l].bias.size());
  }
  return out;
}

}  // namespace internal

// Uniform fan-in initialization: U(-s, s) with s = sqrt(6 / fan_in) on hidden
// layers and 1 / sqrt(fan_in) on the output layer; zero biases.
inline ModelParams InitModel(const ModelConfig& config) {
  config.Validate();
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(config.seed);
  std::vector<int> dims = {config.input_dim};
  dims.insert(dims.end(), config.layer_widths.begin(), config.layer_widths.end());
  dims.push_back(config.output_dim());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    const bool last = l + 2 == dims.size();
    const double s = last ? 1.0 / std::sqrt(static_cast<double>(in))
                          : std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-s, s);
    DenseLayer layer;
    layer.weight.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = u(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    p.layers.push_back(std::move(layer));
  }
  p.adam.first_moment = internal::ZerosLike(p.layers);
  p.adam.second_moment = internal::ZerosLike(p.layers);
  return p;
}

struct ForwardCache {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;               // after the output transform
};

namespace internal {

inline void Activate(Activation a, Matrix* z) {
  if (a == Activation::kRelu) {
    *z = z->cwiseMax(0.0);
  } else {
    *z = z->array().tanh().matrix();
  }
}

// d act / d z evaluated at pre-activation z, multiplied into g.
inline void ActivationBackward(Activation a, const Matrix& z, Matrix* g) {
  if (a == Activation::kRelu) {
    *g = (z.array() > 0.0).select(g->array(), 0.0).matrix();
  } else {
    *g = (g->array() * (1.0 - z.array().tanh().square())).matrix();
  }
}

inline Matrix Logistic(const Matrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace internal

inline ForwardCache ForwardWithCache(const ModelParams& params,
                                     const Matrix& features) {
  if (features.cols() != params.config.input_dim) {
    throw ValidationError("feature width " + std::to_string(features.cols()) +
                          " differs from model input " +
                          std::to_string(params.config.input_dim));
  }
  ForwardCache cache;
  Matrix h = features;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (!z.allFinite()) {
      throw NumericError("non-finite activation in layer " + std::to_string(l));
    }
    cache.inputs.push_back(std::move(h));
    h = z;
    if (l + 1 < params.layers.size()) internal::Activate(params.config.activation, &h);
    cache.pre.push_back(std::move(z));
  }
  if (params.config.output == OutputTransform::kLogistic) h = internal::Logistic(h);
  cache.output = std::move(h);
  return cache;
}

inline PredictionMatrix SplitHeads(const Matrix& output, int m) {
  return {output.leftCols(m), output.rightCols(m)};
}

inline PredictionMatrix Forward(const ModelParams& params, const Matrix& features) {
  return SplitHeads(ForwardWithCache(params, features).output,
                    params.config.num_treatments);
}

// Exact gradients of <upstream, outputs> with respect to every parameter.
// With `upstream_on_logits`, upstream is taken with respect to the values
// before the output transform.
inline ParamGradients Backward(const ModelParams& params,
                               const ForwardCache& cache,
                               const GradientPair& upstream,
                               bool upstream_on_logits = false) {
  const int m = params.config.num_treatments;
  const auto n = cache.output.rows();
  if (upstream.d_revenue.rows() != n || upstream.d_revenue.cols() != m ||
      upstream.d_cost.rows() != n || upstream.d_cost.cols() != m) {
    throw ValidationError("upstream gradient shape does not match model output");
  }
  Matrix g(n, 2 * m);
  g.leftCols(m) = upstream.d_revenue;
  g.rightCols(m) = upstream.d_cost;
  if (params.config.output == OutputTransform::kLogistic && !upstream_on_logits) {
    const Matrix& s = cache.output;
    g = (g.array() * s.array() * (1.0 - s.array())).matrix();
  }
  ParamGradients grads(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    if (l + 1 < params.layers.size()) {
      internal::ActivationBackward(params.config.activation, cache.pre[l], &g);
    }
    grads[l].weight = g.transpose() * cache.inputs[l];
    grads[l].bias = g.colwise().sum().transpose();
    if (l > 0) g = g * params.layers[l].weight;
  }
  return grads;
}

inline ParamGradients Backward(const ModelParams& params, const Matrix& features,
                               const GradientPair& upstream,
                               bool upstream_on_logits = false) {
  return Backward(params, ForwardWithCache(params, features), upstream,
                  upstream_on_logits);
}

// Adam update with bias correction. Returns false, leaving the parameters
// and moments untouched, when any gradient entry is non-finite.
inline bool OptimizerStep(ModelParams* params, const ParamGradients& grads,
                          double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (grads.size() != params->layers.size()) {
    throw ValidationError("gradient layer count differs from model");
  }
  for (const auto& g : grads) {
    if (!g.weight.allFinite() || !g.bias.allFinite()) return false;
  }
  AdamState& a = params->adam;
  ++a.step;
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(a.step));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(a.step));
  auto update = [&](auto& w, auto& m1, auto& m2, const auto& g) {
    m1 = a.beta1 * m1 + (1.0 - a.beta1) * g;
    m2 = a.beta2 * m2 + (1.0 - a.beta2) * g.cwiseProduct(g);
    w.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + a.epsilon);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    update(params->layers[l].weight, a.first_moment[l].weight,
           a.second_moment[l].weight, grads[l].weight);
    update(params->layers[l].bias, a.first_moment[l].bias,
           a.second_moment[l].bias, grads[l].bias);
    if (!params->layers[l].weight.allFinite() || !params->layers[l].bias.allFinite()) {
      throw NumericError("non-finite parameter after update in layer " +
                         std::to_string(l));
    }
  }
  return true;
}

// Mini-batch index lists for one epoch; batch_size <= 0 means one full batch.
inline std::vector<std::vector<std::size_t>> MakeBatches(std::size_t n,
                                                         long long batch_size,
                                                         std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<std::size_t>> batches;
  if (batch_size <= 0 || static_cast<std::size_t>(batch_size) >= n) {
    batches.push_back(std::move(order));
    return batches;
  }
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(n, b + static_cast<std::size_t>(batch_size));
    std::vector<std::size_t> batch(order.begin() + b, order.begin() + e);
    std::sort(batch.begin(), batch.end());
    batches.push_back(std::move(batch));
  }
  return batches;
}

enum class WarmStartObjective { kSquaredError, kCrossEntropy };

struct WarmStartOptions {
  double lr = 1e-3;
  long long batch_size = 0;
  unsigned long long seed = 0;
};

// Inverse-propensity weighted binary cross-entropy on observed entries; the
// gradient is taken with respect to the logits.
inline double CrossEntropyLoss(const RctDataset& data, const Matrix& logits,
                               GradientPair* logit_grad) {
  const int m = data.num_treatments();
  const auto n = static_cast<Eigen::Index>(data.size());
  if (logit_grad) *logit_grad = GradientPair::Zero(n, m);
  const double nd = static_cast<double>(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = data.treatment(i);
    const double w = 1.0 / (static_cast<double>(m) * nd * data.propensity_of(i));
    const double ys[2] = {data.revenue()[i], data.cost()[i]};
    const double zs[2] = {logits(i, t), logits(i, m + t)};
    for (int h = 0; h < 2; ++h) {
      const double z = zs[h], y = ys[h];
      // log(1 + e^z) - y z, computed stably.
      loss += w * (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z);
      if (logit_grad) {
        const double s = 1.0 / (1.0 + std::exp(-z));
        (h == 0 ? logit_grad->d_revenue : logit_grad->d_cost)(i, t) = w * (s - y);
      }
    }
  }
  return loss;
}

// Trains on the prediction loss alone. Cross-entropy needs 0/1 outcomes and a
// model with the logistic output transform.
inline ModelParams WarmStart(ModelParams params, const RctDataset& data,
                             int epochs, WarmStartObjective objective,
                             const WarmStartOptions& options = {}) {
  if (epochs < 0) throw ConfigError("warm-start epochs must be >= 0");
  if (objective == WarmStartObjective::kCrossEntropy) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double r = data.revenue()[i], c = data.cost()[i];
      if ((r != 0.0 && r != 1.0) || (c != 0.0 && c != 1.0)) {
        throw ConfigError("cross-entropy warm start requires binary outcomes");
      }
    }
    if (params.config.output != OutputTransform::kLogistic) {
      throw ConfigError("cross-entropy warm start requires a logistic output");
    }
  }
  std::mt19937_64 rng(options.seed);
  for (int e = 0; e < epochs; ++e) {
    for (const auto& idx : MakeBatches(data.size(), options.batch_size, rng)) {
      RctDataset batch = idx.size() == data.size() ? data : data.Subset(idx);
      GradientPair g;
      if (objective == WarmStartObjective::kSquaredError) {
        PredictionLoss(batch, Forward(params, batch.features()), &g);
        OptimizerStep(&params, Backward(params, batch.features(), g), options.lr);
      } else {
        ModelParams logit_view = params;
        logit_view.config.output = OutputTransform::kIdentity;
        const Matrix logits = ForwardWithCache(logit_view, batch.features()).output;
        CrossEntropyLoss(batch, logits, &g);
        OptimizerStep(&params, Backward(params, batch.features(), g, true),
                      options.lr);
      }
    }
  }
  return params;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Binary layout, all integers and reals little-endian:
//   8 bytes   magic "DFCLMLP1"
//   u32       format version (1)
//   u32       input_dim
//   u32       num_treatments
//   u32       hidden layer count H, then H x u32 widths
//   u32       activation (0 relu, 1 tanh)
//   u32       output transform (0 identity, 1 logistic)
//   u64       init seed
//   u64       optimizer step count
//   per layer in input-to-output order:
//     f64[out * in] weights, row-major (row = output unit)
//     f64[out]      biases
//   u64       echo length L, then L bytes of free text (training config)

namespace internal {

inline void PutU32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void PutU64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void PutF64(std::ostream& out, double v) {
  PutU64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t GetBytes(std::istream& in, int count) {
  unsigned char b[8] = {0};
  in.read(reinterpret_cast<char*>(b), count);
  if (!in) throw ValidationError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int k = count - 1; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

inline std::uint32_t GetU32(std::istream& in) {
  return static_cast<std::uint32_t>(GetBytes(in, 4));
}
inline std::uint64_t GetU64(std::istream& in) { return GetBytes(in, 8); }
inline double GetF64(std::istream& in) {
  return std::bit_cast<double>(GetBytes(in, 8));
}

constexpr char kCheckpointMagic[8] = {'D', 'F', 'C', 'L', 'M', 'L', 'P', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace internal

inline void WriteCheckpoint(std::ostream& out, const ModelParams& params,
                            const std::string& echo = "") {
  using namespace internal;
  const ModelConfig& c = params.config;
  out.write(kCheckpointMagic, 8);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(c.input_dim));
  PutU32(out, static_cast<std::uint32_t>(c.num_treatments));
  PutU32(out, static_cast<std::uint32_t>(c.layer_widths.size()));
  for (int w : c.layer_widths) PutU32(out, static_cast<std::uint32_t>(w));
  PutU32(out, static_cast<std::uint32_t>(c.activation));
  PutU32(out, static_cast<std::uint32_t>(c.output));
  PutU64(out, c.seed);
  PutU64(out, static_cast<std::uint64_t>(params.adam.step));
  for (const auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index k = 0; k < layer.weight.cols(); ++k) {
        PutF64(out, layer.weight(r, k));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) PutF64(out, layer.bias[r]);
  }
  PutU64(out, echo.size());
  out.write(echo.data(), static_cast<std::streamsize>(echo.size()));
}

struct Checkpoint {
  ModelParams params;
  std::string echo;
};

inline Checkpoint ReadCheckpoint(std::istream& in) {
  using namespace internal;
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw ValidationError("not a model checkpoint (bad magic)");
  }
  if (GetU32(in) != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version");
  }
  ModelConfig c;
  c.input_dim = static_cast<int>(GetU32(in));
  c.num_treatments = static_cast<int>(GetU32(in));
  const std::uint32_t hidden = GetU32(in);
  if (hidden > 1024) throw ValidationError("implausible layer count in checkpoint");
  c.layer_widths.clear();
  for (std::uint32_t k = 0; k < hidden; ++k) {
    c.layer_widths.push_back(static_cast<int>(GetU32(in)));
  }
  const std::uint32_t act = GetU32(in), outt = GetU32(in);
  if (act > 1 || outt > 1) throw ValidationError("bad enum in checkpoint");
  c.activation = static_cast<Activation>(act);
  c.output = static_cast<OutputTransform>(outt);
  c.seed = GetU64(in);
  Checkpoint ck;
  ck.params = InitModel(c);
  ck.params.adam.step = static_cast<long long>(GetU64(in));
  for (auto& layer : ck.params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index k = 0; k < layer.weight.cols(); ++k) {
        layer.weight(r, k) = GetF64(in);
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = GetF64(in);
  }
  const std::uint64_t len = GetU64(in);
  if (len > (1u << 24)) throw ValidationError("implausible echo length");
  ck.echo.resize(len);
  in.read(ck.echo.data(), static_cast<std::streamsize>(len));
  if (!in && len > 0) throw ValidationError("truncated checkpoint echo");
  return ck;
}

inline std::string CheckpointManifest(const ModelParams& params) {
  const ModelConfig& c = params.config;
  std::ostringstream os;
  os << "format=DFCLMLP1\nversion=" << internal::kCheckpointVersion
     << "\nendianness=little\nreal=f64\ninput_dim=" << c.input_dim
     << "\nnum_treatments=" << c.num_treatments << "\nhidden=";
  for (std::size_t k = 0; k < c.layer_widths.size(); ++k) {
    os << (k ? "," : "") << c.layer_widths[k];
  }
  os << "\nactivation=" << ActivationName(c.activation)
     << "\noutput=" << (c.output == OutputTransform::kLogistic ? "logistic" : "identity")
     << "\nseed=" << c.seed << "\nparameters=" << params.num_params()
     << "\nlayer_order=input_to_output; weights row-major (out x in) then biases\n"
     << "heads=revenue[0..M-1],cost[M..2M-1]\n";
  return os.str();
}

// Writes `path` and `path.manifest` through temporary files and renames.
inline void SaveCheckpoint(const std::string& path, const ModelParams& params,
                           const std::string& echo = "") {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write checkpoint: " + path);
    WriteCheckpoint(out, params, echo);
    if (!out) throw ValidationError("failed writing checkpoint: " + path);
  }
  std::filesystem::rename(tmp, path);
  const std::string mtmp = path + ".manifest.tmp";
  {
    std::ofstream out(mtmp, std::ios::trunc);
    out << CheckpointManifest(params);
  }
  std::filesystem::rename(mtmp, path + ".manifest");
}

inline Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  return ReadCheckpoint(in);
}

}  // namespace dfcl

#endif  // DFCL_PREDICTOR_HPP_
