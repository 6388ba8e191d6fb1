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

// Sanitizer: per-example l2 clipping and Gaussian perturbation of the summed
// clipped gradients.

#ifndef DPTK_MECHANISMS_H_
#define DPTK_MECHANISMS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "dptk/random.h"

namespace dptk {

// Clipping thresholds over a flat gradient vector. With no segments the whole
// vector is clipped against thresholds[0]; otherwise segment i (consecutive,
// sizes summing to the vector length) is clipped against thresholds[i].
// +infinity disables clipping.
struct ClipConfig {
  std::vector<double> thresholds;
  std::vector<std::size_t> segment_sizes;

  static ClipConfig whole(double threshold);
  static ClipConfig per_segment(std::vector<std::size_t> sizes,
                                std::vector<double> thresholds);

  std::size_t segment_count() const noexcept { return thresholds.size(); }
  void validate(std::size_t dim) const;
};

std::vector<double> clip_l2(std::span<const double> g, double threshold);
void clip_l2_in_place(std::span<double> g, double threshold);

std::vector<double> clip(std::span<const double> g, const ClipConfig& config);

// Index-ordered pairwise (tree) sum of equal-length vectors.
std::vector<double> pairwise_sum(std::span<const std::vector<double>> vectors,
                                 std::size_t dim);

// (sum_i clip(g_i) + N(0, sigma^2 C^2 I)) / lot_size, where C is taken per
// segment. Noise is drawn from `noise` in coordinate order; lot_size is the
// nominal lot size L, not the number of gradients supplied.
std::vector<double> sanitize(std::span<const std::vector<double>> gradients,
                             std::size_t dim, const ClipConfig& config,
                             double sigma, std::size_t lot_size,
                             NoiseSource& noise);

// Adds N(0, sigma^2 C_i^2) per segment to `sum` and divides by lot_size.
// Shared by sanitize() and the fused training path.
void perturb_and_average(std::span<double> sum, const ClipConfig& config,
                         double sigma, std::size_t lot_size,
                         NoiseSource& noise);

}  // namespace dptk

#endif  // DPTK_MECHANISMS_H_
