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

// Feedforward network: affine layers with ReLU between them and a linear
// output layer feeding softmax cross-entropy.
//
// Flat parameter layout (used for per-example gradients, clipping and
// checkpoints): layer by layer, the out x in weight matrix row-major followed
// by the out-dimensional bias.

#ifndef DPTK_NN_H_
#define DPTK_NN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dptk/data.h"
#include "dptk/mechanisms.h"

namespace dptk {

struct DenseLayer {
  RowMatrix weights;  // out x in
  Eigen::VectorXd bias;

  std::size_t in() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  std::size_t parameter_count() const noexcept { return out() * (in() + 1); }
};

class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(std::vector<DenseLayer> layers);

  // dims = {input, hidden..., output}.
  static MlpParams zeros(std::span<const std::size_t> dims);
  // Weights uniform in +-sqrt(6 / (in + out)), biases zero.
  static MlpParams glorot_uniform(std::span<const std::size_t> dims,
                                  std::uint64_t seed);
  static MlpParams unflatten(std::span<const std::size_t> dims,
                             std::span<const double> flat);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }
  std::vector<std::size_t> dims() const;
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  std::vector<std::size_t> layer_parameter_counts() const;

  std::vector<double> flatten() const;
  // this += scale * flat.
  void add_scaled(std::span<const double> flat, double scale);

  void validate() const;

  friend bool operator==(const MlpParams& a, const MlpParams& b);

 private:
  std::vector<DenseLayer> layers_;
};

struct ForwardTrace {
  // activations[0] is the input; activations[l + 1] = relu(pre_activations[l])
  // for hidden layers. pre_activations.back() are the logits.
  std::vector<Eigen::VectorXd> activations;
  std::vector<Eigen::VectorXd> pre_activations;
};

struct ForwardResult {
  Eigen::VectorXd logits;
  ForwardTrace trace;
};

ForwardResult forward(const MlpParams& params, std::span<const double> x);

// Logits for every row of `inputs`.
RowMatrix forward_batch(const MlpParams& params, const RowMatrix& inputs);

// -log softmax(logits)[label], stabilized by max subtraction.
double loss(std::span<const double> logits, int label);

// Mean loss over a dataset.
double mean_loss(const MlpParams& params, const Dataset& data);

// Exact per-example gradients (flat layout), formed as outer products of
// backpropagated deltas and cached activations over the whole batch.
std::vector<std::vector<double>> per_example_gradients(
    const MlpParams& params, std::span<const LabeledExample> batch);

// Mean gradient over the batch from a single whole-batch backward pass.
std::vector<double> batch_gradient(const MlpParams& params,
                                   std::span<const LabeledExample> batch);

// Sum over rows of the clipped per-example gradients without materializing
// them: per-layer norms come from ||delta a^T||_F^2 + ||delta||^2 =
// ||delta||^2 (||a||^2 + 1). `clip` is either whole-vector or segmented by
// layer_parameter_counts().
std::vector<double> clipped_gradient_sum(const MlpParams& params,
                                         const RowMatrix& inputs,
                                         std::span<const int> labels,
                                         const ClipConfig& clip);

// l2 norm of each row's full per-example gradient.
std::vector<double> per_example_gradient_norms(const MlpParams& params,
                                               const RowMatrix& inputs,
                                               std::span<const int> labels);

// Argmax accuracy; ties go to the lowest class index.
double evaluate(const MlpParams& params, const Dataset& data);

// Versioned little-endian container: "DPNN", u32 version, u32 layer count,
// u32 dims (layer count + 1), then per layer the f64 weights (row-major) and
// f64 bias.
void save_checkpoint(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dptk

#endif  // DPTK_NN_H_
