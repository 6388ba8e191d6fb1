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

#include "dptk/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dptk/error.h"
#include "dptk/parallel.h"

namespace dptk {
namespace {

void check_finite(std::span<const double> g) {
  for (double v : g) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNonFiniteInput, "gradient has a non-finite entry");
    }
  }
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0)) {
    fail(ErrorCode::kDomainError, "clipping threshold must be positive, got " +
                                      std::to_string(threshold));
  }
}

void sum_range(std::span<const std::vector<double>> vectors, std::size_t begin,
               std::size_t end, std::span<double> out) {
  constexpr std::size_t kLeaf = 8;
  if (end - begin <= kLeaf) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += vectors[i][j];
    }
    return;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  std::vector<double> right(out.size());
  sum_range(vectors, begin, mid, out);
  sum_range(vectors, mid, end, right);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += right[j];
}

}  // namespace

ClipConfig ClipConfig::whole(double threshold) {
  ClipConfig config{{threshold}, {}};
  config.validate(0);
  return config;
}

ClipConfig ClipConfig::per_segment(std::vector<std::size_t> sizes,
                                   std::vector<double> thresholds) {
  ClipConfig config{std::move(thresholds), std::move(sizes)};
  config.validate(std::accumulate(config.segment_sizes.begin(),
                                  config.segment_sizes.end(), std::size_t{0}));
  return config;
}

void ClipConfig::validate(std::size_t dim) const {
  if (thresholds.empty()) {
    fail(ErrorCode::kConfigError, "no clipping threshold given");
  }
  for (double c : thresholds) check_threshold(c);
  if (segment_sizes.empty()) {
    if (thresholds.size() != 1) {
      fail(ErrorCode::kConfigError,
           "several thresholds given without a segment layout");
    }
    return;
  }
  if (segment_sizes.size() != thresholds.size()) {
    fail(ErrorCode::kConfigError, "one threshold per segment required");
  }
  const std::size_t total =
      std::accumulate(segment_sizes.begin(), segment_sizes.end(), std::size_t{0});
  if (total != dim) {
    fail(ErrorCode::kShapeMismatch, "segment sizes sum to " +
                                        std::to_string(total) +
                                        ", gradient has " + std::to_string(dim));
  }
}

void clip_l2_in_place(std::span<double> g, double threshold) {
  check_threshold(threshold);
  check_finite(g);
  if (std::isinf(threshold)) return;
  double norm_sq = 0.0;
  for (double v : g) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  if (norm <= threshold) return;
  const double scale = threshold / norm;
  for (double& v : g) v *= scale;
}

std::vector<double> clip_l2(std::span<const double> g, double threshold) {
  std::vector<double> out(g.begin(), g.end());
  clip_l2_in_place(out, threshold);
  return out;
}

std::vector<double> clip(std::span<const double> g, const ClipConfig& config) {
  config.validate(g.size());
  std::vector<double> out(g.begin(), g.end());
  if (config.segment_sizes.empty()) {
    clip_l2_in_place(out, config.thresholds[0]);
    return out;
  }
  std::size_t offset = 0;
  for (std::size_t s = 0; s < config.segment_sizes.size(); ++s) {
    clip_l2_in_place(std::span(out).subspan(offset, config.segment_sizes[s]),
                     config.thresholds[s]);
    offset += config.segment_sizes[s];
  }
  return out;
}

std::vector<double> pairwise_sum(std::span<const std::vector<double>> vectors,
                                 std::size_t dim) {
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      fail(ErrorCode::kShapeMismatch, "gradient length " +
                                          std::to_string(v.size()) +
                                          " != " + std::to_string(dim));
    }
  }
  std::vector<double> out(dim, 0.0);
  if (!vectors.empty()) sum_range(vectors, 0, vectors.size(), out);
  return out;
}

void perturb_and_average(std::span<double> sum, const ClipConfig& config,
                         double sigma, std::size_t lot_size,
                         NoiseSource& noise) {
  config.validate(sum.size());
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    fail(ErrorCode::kDomainError, "sigma must be finite and >= 0");
  }
  if (lot_size == 0) fail(ErrorCode::kDomainError, "lot size must be positive");

  if (sigma > 0.0) {
    std::vector<double> z;
    std::size_t offset = 0;
    for (std::size_t s = 0; s < config.segment_count(); ++s) {
      const std::size_t len =
          config.segment_sizes.empty() ? sum.size() : config.segment_sizes[s];
      const double threshold = config.thresholds[s];
      if (std::isinf(threshold)) {
        fail(ErrorCode::kDomainError,
             "noise needs a finite clipping threshold");
      }
      z.resize(len);
      noise.fill(z, sigma * threshold);
      for (std::size_t j = 0; j < len; ++j) sum[offset + j] += z[j];
      offset += len;
    }
  }
  const auto lot = static_cast<double>(lot_size);
  for (double& v : sum) v /= lot;
}

std::vector<double> sanitize(std::span<const std::vector<double>> gradients,
                             std::size_t dim, const ClipConfig& config,
                             double sigma, std::size_t lot_size,
                             NoiseSource& noise) {
  config.validate(dim);
  std::vector<std::vector<double>> clipped(gradients.size());
  parallel_for(
      gradients.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          if (gradients[i].size() != dim) {
            fail(ErrorCode::kShapeMismatch, "gradient length mismatch");
          }
          clipped[i] = clip(gradients[i], config);
        }
      },
      16);
  std::vector<double> total = pairwise_sum(clipped, dim);
  perturb_and_average(total, config, sigma, lot_size, noise);
  return total;
}

}  // namespace dptk
