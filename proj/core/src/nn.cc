// Copyright 2026 The dp_toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dptk/nn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "dptk/binary_io.h"
#include "dptk/error.h"
#include "dptk/parallel.h"
#include "dptk/random.h"

namespace dptk {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr Eigen::Index kEvalChunk = 2048;

struct BatchPass {
  // activations[0] = inputs; activations[l + 1] = relu(pre[l]) (hidden only).
  std::vector<RowMatrix> activations;
  std::vector<RowMatrix> pre;
  // deltas[l] = dLoss/dpre[l], one row per example.
  std::vector<RowMatrix> deltas;
};

void check_input_dim(const MlpParams& params, std::size_t dim) {
  if (dim != params.input_dim()) {
    fail(ErrorCode::kShapeMismatch, "input has " + std::to_string(dim) +
                                        " features, network expects " +
                                        std::to_string(params.input_dim()));
  }
}

RowMatrix run_forward(const MlpParams& params, const RowMatrix& inputs,
                      std::vector<RowMatrix>* activations,
                      std::vector<RowMatrix>* pre) {
  check_input_dim(params, static_cast<std::size_t>(inputs.cols()));
  const auto& layers = params.layers();
  RowMatrix a = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    RowMatrix z = a * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    if (activations) activations->push_back(std::move(a));
    if (l + 1 == layers.size()) {
      if (pre) pre->push_back(z);
      return z;
    }
    a = z.cwiseMax(0.0);
    if (pre) pre->push_back(std::move(z));
  }
  return a;
}

// Row-wise softmax minus one-hot.
RowMatrix output_delta(const RowMatrix& logits, std::span<const int> labels,
                       std::size_t num_classes) {
  RowMatrix delta(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      delta(i, j) = std::exp(logits(i, j) - peak);
      total += delta(i, j);
    }
    delta.row(i) /= total;
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      fail(ErrorCode::kDomainError, "label out of range");
    }
    delta(i, label) -= 1.0;
  }
  return delta;
}

BatchPass forward_backward(const MlpParams& params, const RowMatrix& inputs,
                           std::span<const int> labels) {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
    fail(ErrorCode::kShapeMismatch, "inputs and labels differ in length");
  }
  BatchPass pass;
  const RowMatrix logits = run_forward(params, inputs, &pass.activations, &pass.pre);
  const auto& layers = params.layers();
  pass.deltas.resize(layers.size());
  pass.deltas.back() = output_delta(logits, labels, params.output_dim());
  for (std::size_t l = layers.size() - 1; l > 0; --l) {
    RowMatrix back = pass.deltas[l] * layers[l].weights;
    pass.deltas[l - 1] =
        back.cwiseProduct((pass.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return pass;
}

std::pair<RowMatrix, std::vector<int>> stack(std::span<const LabeledExample> batch,
                                             std::size_t dim) {
  RowMatrix inputs(static_cast<Eigen::Index>(batch.size()),
                   static_cast<Eigen::Index>(dim));
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].features.size() != dim) {
      fail(ErrorCode::kShapeMismatch, "example " + std::to_string(i) + " has " +
                                          std::to_string(batch[i].features.size()) +
                                          " features, expected " +
                                          std::to_string(dim));
    }
    std::copy(batch[i].features.begin(), batch[i].features.end(),
              inputs.row(static_cast<Eigen::Index>(i)).data());
    labels[i] = batch[i].label;
  }
  return {std::move(inputs), std::move(labels)};
}

}  // namespace

MlpParams::MlpParams(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  validate();
}

MlpParams MlpParams::zeros(std::span<const std::size_t> dims) {
  if (dims.size() < 2) {
    fail(ErrorCode::kShapeMismatch, "need at least input and output dims");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) {
      fail(ErrorCode::kShapeMismatch, "layer dims must be positive");
    }
    layers.push_back({RowMatrix::Zero(static_cast<Eigen::Index>(dims[l + 1]),
                                      static_cast<Eigen::Index>(dims[l])),
                      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[l + 1]))});
  }
  return MlpParams(std::move(layers));
}

MlpParams MlpParams::glorot_uniform(std::span<const std::size_t> dims,
                                    std::uint64_t seed) {
  MlpParams params = zeros(dims);
  CounterRng rng(seed, /*stream=*/0x1417);
  for (auto& layer : params.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = limit * (2.0 * rng.uniform() - 1.0);
    }
  }
  return params;
}

MlpParams MlpParams::unflatten(std::span<const std::size_t> dims,
                               std::span<const double> flat) {
  MlpParams params = zeros(dims);
  if (flat.size() != params.parameter_count()) {
    fail(ErrorCode::kShapeMismatch, "flat vector has " + std::to_string(flat.size()) +
                                        " entries, layout needs " +
                                        std::to_string(params.parameter_count()));
  }
  params.add_scaled(flat, 1.0);
  return params;
}

std::vector<std::size_t> MlpParams::dims() const {
  std::vector<std::size_t> dims;
  if (layers_.empty()) return dims;
  dims.push_back(layers_.front().in());
  for (const auto& layer : layers_) dims.push_back(layer.out());
  return dims;
}

std::size_t MlpParams::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in();
}

std::size_t MlpParams::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.parameter_count();
  return total;
}

std::vector<std::size_t> MlpParams::layer_parameter_counts() const {
  std::vector<std::size_t> counts;
  for (const auto& layer : layers_) counts.push_back(layer.parameter_count());
  return counts;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.weights.data(),
                layer.weights.data() + layer.weights.size());
    flat.insert(flat.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return flat;
}

void MlpParams::add_scaled(std::span<const double> flat, double scale) {
  if (flat.size() != parameter_count()) {
    fail(ErrorCode::kShapeMismatch, "update length does not match parameters");
  }
  std::size_t offset = 0;
  for (auto& layer : layers_) {
    double* w = layer.weights.data();
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) w[i] += scale * flat[offset++];
    double* b = layer.bias.data();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) b[i] += scale * flat[offset++];
  }
}

void MlpParams::validate() const {
  if (layers_.empty()) fail(ErrorCode::kShapeMismatch, "network has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weights.rows()) {
      fail(ErrorCode::kShapeMismatch, "bias length mismatch in layer " + std::to_string(l));
    }
    if (l > 0 && layer.in() != layers_[l - 1].out()) {
      fail(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) +
                                          " input does not chain with the previous output");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      fail(ErrorCode::kNonFiniteInput, "non-finite parameter in layer " + std::to_string(l));
    }
  }
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (a.dims() != b.dims()) return false;
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  return std::memcmp(fa.data(), fb.data(), sizeof(double) * fa.size()) == 0;
}

ForwardResult forward(const MlpParams& params, std::span<const double> x) {
  check_input_dim(params, x.size());
  ForwardResult result;
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(),
                                                        static_cast<Eigen::Index>(x.size()));
  const auto& layers = params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].weights * a + layers[l].bias;
    result.trace.activations.push_back(a);
    result.trace.pre_activations.push_back(z);
    if (l + 1 == layers.size()) {
      result.logits = std::move(z);
    } else {
      a = z.cwiseMax(0.0);
    }
  }
  return result;
}

RowMatrix forward_batch(const MlpParams& params, const RowMatrix& inputs) {
  return run_forward(params, inputs, nullptr, nullptr);
}

double loss(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    fail(ErrorCode::kDomainError, "label out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  return std::max(0.0, std::log(total) + peak - logits[static_cast<std::size_t>(label)]);
}

double mean_loss(const MlpParams& params, const Dataset& data) {
  if (data.empty()) fail(ErrorCode::kEmptyDataset, "dataset is empty");
  double total = 0.0;
  for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(data.size());
       start += kEvalChunk) {
    const Eigen::Index rows =
        std::min<Eigen::Index>(kEvalChunk, static_cast<Eigen::Index>(data.size()) - start);
    const RowMatrix logits = forward_batch(params, data.features().middleRows(start, rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
      total += loss(std::span<const double>(logits.row(i).data(),
                                            static_cast<std::size_t>(logits.cols())),
                    data.labels()[static_cast<std::size_t>(start + i)]);
    }
  }
  return total / static_cast<double>(data.size());
}

std::vector<std::vector<double>> per_example_gradients(
    const MlpParams& params, std::span<const LabeledExample> batch) {
  if (batch.empty()) fail(ErrorCode::kEmptyDataset, "batch is empty");
  const auto [inputs, labels] = stack(batch, params.input_dim());
  const BatchPass pass = forward_backward(params, inputs, labels);
  const auto& layers = params.layers();
  const std::size_t dim = params.parameter_count();

  std::vector<std::vector<double>> grads(batch.size());
  parallel_for(batch.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      std::vector<double>& g = grads[i];
      g.resize(dim);
      std::size_t offset = 0;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto delta = pass.deltas[l].row(row);
        const auto act = pass.activations[l].row(row);
        for (Eigen::Index r = 0; r < delta.size(); ++r) {
          for (Eigen::Index c = 0; c < act.size(); ++c) g[offset++] = delta(r) * act(c);
        }
        for (Eigen::Index r = 0; r < delta.size(); ++r) g[offset++] = delta(r);
      }
    }
  }, 8);
  return grads;
}

std::vector<double> batch_gradient(const MlpParams& params,
                                   std::span<const LabeledExample> batch) {
  if (batch.empty()) fail(ErrorCode::kEmptyDataset, "batch is empty");
  const auto [inputs, labels] = stack(batch, params.input_dim());
  const BatchPass pass = forward_backward(params, inputs, labels);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    const RowMatrix gw = (pass.deltas[l].transpose() * pass.activations[l]) * inv_n;
    const Eigen::VectorXd gb = pass.deltas[l].colwise().sum().transpose() * inv_n;
    flat.insert(flat.end(), gw.data(), gw.data() + gw.size());
    flat.insert(flat.end(), gb.data(), gb.data() + gb.size());
  }
  return flat;
}

namespace {

// Per-example squared gradient norm of each layer, rows x layers.
Eigen::MatrixXd layer_norms_sq(const BatchPass& pass) {
  const Eigen::Index n = pass.activations.front().rows();
  Eigen::MatrixXd norms(n, static_cast<Eigen::Index>(pass.deltas.size()));
  for (std::size_t l = 0; l < pass.deltas.size(); ++l) {
    const Eigen::VectorXd delta_sq = pass.deltas[l].rowwise().squaredNorm();
    const Eigen::VectorXd act_sq = pass.activations[l].rowwise().squaredNorm();
    norms.col(static_cast<Eigen::Index>(l)) =
        delta_sq.cwiseProduct((act_sq.array() + 1.0).matrix());
  }
  return norms;
}

}  // namespace

std::vector<double> clipped_gradient_sum(const MlpParams& params,
                                         const RowMatrix& inputs,
                                         std::span<const int> labels,
                                         const ClipConfig& clip) {
  const auto counts = params.layer_parameter_counts();
  clip.validate(params.parameter_count());
  const bool per_layer = !clip.segment_sizes.empty();
  if (per_layer && clip.segment_sizes != counts) {
    fail(ErrorCode::kConfigError, "clip segments must follow the layer layout");
  }
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  if (inputs.rows() == 0) {
    flat.assign(params.parameter_count(), 0.0);
    return flat;
  }
  const BatchPass pass = forward_backward(params, inputs, labels);
  const Eigen::MatrixXd norms_sq = layer_norms_sq(pass);
  const Eigen::Index n = inputs.rows();
  const std::size_t num_layers = params.layers().size();

  // scale(i, l): factor applied to example i's layer-l gradient.
  Eigen::MatrixXd scale = Eigen::MatrixXd::Ones(n, static_cast<Eigen::Index>(num_layers));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (per_layer) {
      for (std::size_t l = 0; l < num_layers; ++l) {
        const double c = clip.thresholds[l];
        const double norm = std::sqrt(norms_sq(i, static_cast<Eigen::Index>(l)));
        if (!std::isinf(c) && norm > c) scale(i, static_cast<Eigen::Index>(l)) = c / norm;
      }
    } else {
      const double c = clip.thresholds[0];
      const double norm = std::sqrt(norms_sq.row(i).sum());
      if (!std::isinf(c) && norm > c) scale.row(i).setConstant(c / norm);
    }
  }
  for (std::size_t l = 0; l < num_layers; ++l) {
    const RowMatrix scaled =
        scale.col(static_cast<Eigen::Index>(l)).asDiagonal() * pass.deltas[l];
    const RowMatrix gw = scaled.transpose() * pass.activations[l];
    const Eigen::VectorXd gb = scaled.colwise().sum().transpose();
    flat.insert(flat.end(), gw.data(), gw.data() + gw.size());
    flat.insert(flat.end(), gb.data(), gb.data() + gb.size());
  }
  if (!std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); })) {
    fail(ErrorCode::kNonFiniteInput, "non-finite gradient");
  }
  return flat;
}

std::vector<double> per_example_gradient_norms(const MlpParams& params,
                                               const RowMatrix& inputs,
                                               std::span<const int> labels) {
  const BatchPass pass = forward_backward(params, inputs, labels);
  const Eigen::VectorXd totals = layer_norms_sq(pass).rowwise().sum();
  std::vector<double> norms(static_cast<std::size_t>(totals.size()));
  for (Eigen::Index i = 0; i < totals.size(); ++i) norms[static_cast<std::size_t>(i)] = std::sqrt(totals(i));
  return norms;
}

double evaluate(const MlpParams& params, const Dataset& data) {
  if (data.empty()) fail(ErrorCode::kEmptyDataset, "dataset is empty");
  std::size_t correct = 0;
  for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(data.size());
       start += kEvalChunk) {
    const Eigen::Index rows =
        std::min<Eigen::Index>(kEvalChunk, static_cast<Eigen::Index>(data.size()) - start);
    const RowMatrix logits = forward_batch(params, data.features().middleRows(start, rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < logits.cols(); ++j) {
        if (logits(i, j) > logits(i, best)) best = j;
      }
      if (best == data.labels()[static_cast<std::size_t>(start + i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params) {
  params.validate();
  BinaryWriter out(path);
  out.raw("DPNN");
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(params.layers().size()));
  for (std::size_t d : params.dims()) out.u32(static_cast<std::uint32_t>(d));
  out.f64s(params.flatten());
  out.close();
}

MlpParams load_checkpoint(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic("DPNN");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kBadMagic, path.string() + ": unsupported checkpoint version " +
                                   std::to_string(version));
  }
  const std::uint32_t layer_count = in.u32();
  if (layer_count == 0 || layer_count > 1024) {
    fail(ErrorCode::kIoError, path.string() + ": implausible layer count " +
                                  std::to_string(layer_count));
  }
  std::vector<std::size_t> dims(layer_count + 1);
  for (auto& d : dims) d = in.u32();
  MlpParams params = MlpParams::zeros(dims);
  std::vector<double> flat(params.parameter_count());
  in.f64s(flat);
  in.expect_end();
  params.add_scaled(flat, 1.0);
  params.validate();
  return params;
}

}  // namespace dptk
