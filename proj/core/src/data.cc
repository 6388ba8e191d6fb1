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

#include "dptk/data.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dptk/error.h"
#include "dptk/random.h"

namespace dptk {
namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  if (path.extension() == ".gz") {
    gzFile file = gzopen(path.c_str(), "rb");
    if (file == nullptr) {
      fail(ErrorCode::kIoError, "cannot open " + path.string());
    }
    unsigned char buffer[1 << 16];
    int n;
    while ((n = gzread(file, buffer, sizeof(buffer))) > 0) {
      bytes.insert(bytes.end(), buffer, buffer + n);
    }
    const bool failed = n < 0;
    gzclose(file);
    if (failed) fail(ErrorCode::kIoError, "gzip error reading " + path.string());
    return bytes;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  bytes.assign(std::istreambuf_iterator<char>(in), {});
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    fail(ErrorCode::kTruncatedFile, path.string() + ": header ends at offset " +
                                        std::to_string(bytes.size()) +
                                        ", need 4 bytes at offset " +
                                        std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | bytes[offset + 3];
}

void expect_magic(std::uint32_t magic, std::uint32_t expected,
                  const std::filesystem::path& path) {
  if (magic != expected) {
    fail(ErrorCode::kBadMagic, path.string() + ": magic " +
                                   std::to_string(magic) + " at offset 0, "
                                   "expected " + std::to_string(expected));
  }
}

void expect_payload(const std::vector<unsigned char>& bytes,
                    std::size_t header, std::size_t payload,
                    const std::filesystem::path& path) {
  if (bytes.size() < header + payload) {
    fail(ErrorCode::kTruncatedFile,
         path.string() + ": data ends at offset " +
             std::to_string(bytes.size()) + ", expected " +
             std::to_string(header + payload) + " bytes");
  }
}

}  // namespace

Dataset::Dataset(RowMatrix features, std::vector<int> labels, int num_classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes) {
  if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
    fail(ErrorCode::kShapeMismatch, "feature rows and label count differ");
  }
  if (num_classes_ <= 0) fail(ErrorCode::kDomainError, "num_classes must be > 0");
  for (int label : labels_) {
    if (label < 0 || label >= num_classes_) {
      fail(ErrorCode::kDomainError,
           "label " + std::to_string(label) + " outside [0, " +
               std::to_string(num_classes_) + ")");
    }
  }
  if (!features_.allFinite()) {
    fail(ErrorCode::kNonFiniteInput, "dataset features must be finite");
  }
}

LabeledExample Dataset::example(std::size_t i) const {
  return {std::span<const double>(features_.row(static_cast<Eigen::Index>(i)).data(),
                                  feature_dim()),
          labels_[i]};
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  RowMatrix rows(static_cast<Eigen::Index>(indices.size()), features_.cols());
  std::vector<int> labels(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) {
      fail(ErrorCode::kDomainError, "subset index out of range");
    }
    rows.row(static_cast<Eigen::Index>(i)) =
        features_.row(static_cast<Eigen::Index>(indices[i]));
    labels[i] = labels_[indices[i]];
  }
  return Dataset(std::move(rows), std::move(labels), num_classes_);
}

Dataset Dataset::with_features(RowMatrix features) const {
  return Dataset(std::move(features), labels_, num_classes_);
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.num_classes_ == b.num_classes_ && a.labels_ == b.labels_ &&
         a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() &&
         std::memcmp(a.features_.data(), b.features_.data(),
                     sizeof(double) * a.features_.size()) == 0;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  expect_magic(read_be32(images, 0, images_path), kImageMagic, images_path);
  expect_magic(read_be32(labels, 0, labels_path), kLabelMagic, labels_path);

  const std::size_t count = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t label_count = read_be32(labels, 4, labels_path);
  if (count != label_count) {
    fail(ErrorCode::kCountMismatch,
         images_path.string() + " (offset 4) holds " + std::to_string(count) +
             " images but " + labels_path.string() + " (offset 4) holds " +
             std::to_string(label_count) + " labels");
  }
  const std::size_t dim = rows * cols;
  expect_payload(images, 16, count * dim, images_path);
  expect_payload(labels, 8, count, labels_path);

  RowMatrix features(static_cast<Eigen::Index>(count),
                     static_cast<Eigen::Index>(dim));
  const unsigned char* pixels = images.data() + 16;
  for (std::size_t i = 0; i < count * dim; ++i) {
    features.data()[i] = pixels[i] / 255.0;
  }
  std::vector<int> label_values(count);
  for (std::size_t i = 0; i < count; ++i) {
    label_values[i] = labels[8 + i];
    if (label_values[i] >= num_classes) {
      fail(ErrorCode::kDomainError,
           labels_path.string() + ": label " + std::to_string(label_values[i]) +
               " at offset " + std::to_string(8 + i) + " >= " +
               std::to_string(num_classes));
    }
  }
  return Dataset(std::move(features), std::move(label_values), num_classes);
}

Dataset synthetic_blobs(int num_classes, int per_class, int dim,
                        double separation, std::uint64_t seed) {
  if (num_classes <= 0 || per_class <= 0 || dim <= 0 || !(separation >= 0.0) ||
      !std::isfinite(separation)) {
    fail(ErrorCode::kDomainError,
         "synthetic_blobs needs positive counts and separation >= 0");
  }
  CounterRng rng(seed, /*stream=*/0xB10B5);
  RowMatrix centers(num_classes, dim);
  // Rejection sampling on centers drawn at radius ~ separation; the spread
  // grows if the draws keep colliding.
  double spread = std::max(separation, 1.0);
  for (int c = 0; c < num_classes; ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 0 && attempt % 100 == 0) spread *= 1.5;
      for (int j = 0; j < dim; ++j) centers(c, j) = spread * rng.normal();
      bool far_enough = true;
      for (int other = 0; other < c && far_enough; ++other) {
        far_enough = (centers.row(c) - centers.row(other)).norm() >= separation;
      }
      if (far_enough) break;
    }
  }
  const std::size_t n = static_cast<std::size_t>(num_classes) * per_class;
  RowMatrix features(static_cast<Eigen::Index>(n), dim);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % num_classes);
    labels[i] = c;
    for (int j = 0; j < dim; ++j) {
      features(static_cast<Eigen::Index>(i), j) = centers(c, j) + rng.normal();
    }
  }
  return Dataset(std::move(features), std::move(labels), num_classes);
}

}  // namespace dptk
