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

#ifndef DPTK_DATA_H_
#define DPTK_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dptk {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LabeledExample {
  std::span<const double> features;
  int label = 0;
};

// Immutable labeled dataset; row i of features() is example i.
class Dataset {
 public:
  Dataset() = default;
  Dataset(RowMatrix features, std::vector<int> labels, int num_classes);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t feature_dim() const noexcept {
    return static_cast<std::size_t>(features_.cols());
  }
  int num_classes() const noexcept { return num_classes_; }
  const RowMatrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  LabeledExample example(std::size_t i) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset with_features(RowMatrix features) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  RowMatrix features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
};

// Reads an IDX image/label pair (optionally gzip-compressed, selected by a
// ".gz" suffix). Pixels are scaled to [0, 1] and images flattened row-major.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 int num_classes = 10);

// Isotropic unit-variance Gaussian clusters around seeded random centers that
// are pairwise at least `separation` apart.
Dataset synthetic_blobs(int num_classes, int per_class, int dim,
                        double separation, std::uint64_t seed);

}  // namespace dptk

#endif  // DPTK_DATA_H_
