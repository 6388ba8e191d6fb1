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

// Differentially private PCA: sampled rows are normalized to unit l2 norm,
// Gaussian noise is added to the Gram matrix A^T A (upper triangle, mirrored),
// and the top-k eigenvectors of the noisy matrix form the projection.

#ifndef DPTK_DPPCA_H_
#define DPTK_DPPCA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dptk/data.h"
#include "dptk/random.h"

namespace dptk {

struct ProjectionMatrix {
  // d x k; column j is the j-th principal direction.
  Eigen::MatrixXd basis;
  // Eigenvalues of the (noisy) Gram matrix for the kept directions.
  Eigen::VectorXd eigenvalues;

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(basis.rows()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(basis.cols()); }
};

struct JacobiOptions {
  double tolerance = 1e-10;  // on the off-diagonal Frobenius norm
  int max_sweeps = 100;
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns, largest-magnitude entry positive
  int sweeps = 0;
  double off_norm = 0.0;
  bool converged = false;
};

// Cyclic Jacobi rotations on a symmetric matrix.
EigenDecomposition jacobi_eigen(Eigen::MatrixXd symmetric,
                                const JacobiOptions& options = {});

// A^T A with N(0, sigma_p^2) added to every upper-triangular entry (diagonal
// included) and mirrored below. Noise is drawn in row-major upper-triangle
// order.
Eigen::MatrixXd noisy_gram(const RowMatrix& rows, double sigma_p,
                           NoiseSource& noise);

struct DpPcaOptions {
  std::size_t k = 60;
  double sigma_p = 0.0;
  double sample_fraction = 0.1;
  std::uint64_t seed = 0;
  JacobiOptions jacobi;
};

struct DpPcaResult {
  ProjectionMatrix projection;
  std::size_t rows_used = 0;
  // Eigengap at k below 1e-12: the k-dimensional subspace is ambiguous.
  bool rank_deficient = false;
  bool converged = true;
};

DpPcaResult dp_pca(const RowMatrix& examples, const DpPcaOptions& options);

std::vector<double> project(const ProjectionMatrix& projection,
                            std::span<const double> x);
RowMatrix project_rows(const ProjectionMatrix& projection, const RowMatrix& rows);
Dataset project_dataset(const ProjectionMatrix& projection, const Dataset& data);

// "DPCA", u32 version, u32 d, u32 k, f64 basis column by column, f64
// eigenvalues; little-endian.
void save_projection(const std::filesystem::path& path,
                     const ProjectionMatrix& projection);
ProjectionMatrix load_projection(const std::filesystem::path& path);

}  // namespace dptk

#endif  // DPTK_DPPCA_H_
