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

#include "dptk/dppca.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dptk/binary_io.h"
#include "dptk/error.h"

namespace dptk {
namespace {

constexpr std::uint32_t kProjectionVersion = 1;
constexpr double kEigengapWarning = 1e-12;
constexpr std::uint64_t kSampleStream = 0x5043;           // "PC"
constexpr std::uint64_t kNoiseSeedMix = 0x9E3779B97F4A7C15;

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index q = 1; q < a.cols(); ++q) {
    for (Eigen::Index p = 0; p < q; ++p) sum += a(p, q) * a(p, q);
  }
  return std::sqrt(2.0 * sum);
}

void rotate(Eigen::MatrixXd& a, Eigen::MatrixXd& v, Eigen::Index p,
            Eigen::Index q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Eigen::Index n = a.rows();

  double* col_p = a.col(p).data();
  double* col_q = a.col(q).data();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = col_p[k];
    const double akq = col_q[k];
    col_p[k] = c * akp - s * akq;
    col_q[k] = s * akp + c * akq;
  }
  const double app = a(p, p);
  const double aqq = a(q, q);
  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    a(p, k) = col_p[k];
    a(q, k) = col_q[k];
  }

  double* vp = v.col(p).data();
  double* vq = v.col(q).data();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = vp[k];
    const double y = vq[k];
    vp[k] = c * x - s * y;
    vq[k] = s * x + c * y;
  }
}

}  // namespace

EigenDecomposition jacobi_eigen(Eigen::MatrixXd a, const JacobiOptions& options) {
  if (a.rows() != a.cols()) {
    fail(ErrorCode::kShapeMismatch, "jacobi_eigen needs a square matrix");
  }
  if (!a.allFinite()) fail(ErrorCode::kNonFiniteInput, "matrix has non-finite entries");
  const Eigen::Index n = a.rows();
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index p = 0; p < q; ++p) {
      if (a(p, q) != a(q, p)) {
        fail(ErrorCode::kDomainError, "jacobi_eigen needs a symmetric matrix");
      }
    }
  }
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  EigenDecomposition result;
  result.off_norm = off_diagonal_norm(a);
  while (result.off_norm > options.tolerance && result.sweeps < options.max_sweeps) {
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Entries negligible against both diagonal terms are dropped outright
        // after the first sweeps.
        const double g = 100.0 * std::abs(apq);
        if (result.sweeps > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        rotate(a, v, p, q);
      }
    }
    ++result.sweeps;
    result.off_norm = off_diagonal_norm(a);
  }
  result.converged = result.off_norm <= options.tolerance;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return a(x, x) > a(y, y);
  });
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    result.eigenvalues(j) = a(src, src);
    Eigen::VectorXd vec = v.col(src);
    Eigen::Index biggest = 0;
    for (Eigen::Index k = 1; k < n; ++k) {
      if (std::abs(vec(k)) > std::abs(vec(biggest))) biggest = k;
    }
    if (vec(biggest) < 0.0) vec = -vec;
    result.eigenvectors.col(j) = vec;
  }
  return result;
}

Eigen::MatrixXd noisy_gram(const RowMatrix& rows, double sigma_p,
                           NoiseSource& noise) {
  if (!(sigma_p >= 0.0) || !std::isfinite(sigma_p)) {
    fail(ErrorCode::kDomainError, "sigma_p must be finite and >= 0");
  }
  const Eigen::Index d = rows.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  gram.selfadjointView<Eigen::Upper>().rankUpdate(rows.transpose());
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      if (sigma_p > 0.0) gram(i, j) += sigma_p * noise.next();
      gram(j, i) = gram(i, j);
    }
  }
  return gram;
}

DpPcaResult dp_pca(const RowMatrix& examples, const DpPcaOptions& options) {
  const auto d = static_cast<std::size_t>(examples.cols());
  if (options.k == 0 || options.k > d) {
    fail(ErrorCode::kDomainError, "PCA dimension k=" + std::to_string(options.k) +
                                      " must lie in [1, " + std::to_string(d) + "]");
  }
  if (!(options.sample_fraction > 0.0 && options.sample_fraction <= 1.0)) {
    fail(ErrorCode::kDomainError, "sample_fraction must lie in (0, 1]");
  }

  CounterRng sampler(options.seed, kSampleStream);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < examples.rows(); ++i) {
    if (sampler.uniform() < options.sample_fraction && examples.row(i).norm() > 0.0) {
      kept.push_back(i);
    }
  }
  RowMatrix normalized(static_cast<Eigen::Index>(kept.size()), examples.cols());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto row = examples.row(kept[r]);
    normalized.row(static_cast<Eigen::Index>(r)) = row / row.norm();
  }

  NoiseSource noise(options.seed ^ kNoiseSeedMix);
  const EigenDecomposition eig =
      jacobi_eigen(noisy_gram(normalized, options.sigma_p, noise), options.jacobi);

  DpPcaResult result;
  result.rows_used = kept.size();
  result.converged = eig.converged;
  const auto k = static_cast<Eigen::Index>(options.k);
  result.projection.basis = eig.eigenvectors.leftCols(k);
  result.projection.eigenvalues = eig.eigenvalues.head(k);
  if (options.k < d) {
    result.rank_deficient =
        eig.eigenvalues(k - 1) - eig.eigenvalues(k) < kEigengapWarning;
  }
  return result;
}

std::vector<double> project(const ProjectionMatrix& projection,
                            std::span<const double> x) {
  if (x.size() != projection.input_dim()) {
    fail(ErrorCode::kShapeMismatch, "vector has " + std::to_string(x.size()) +
                                        " entries, projection expects " +
                                        std::to_string(projection.input_dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd y = projection.basis.transpose() * v;
  return {y.data(), y.data() + y.size()};
}

RowMatrix project_rows(const ProjectionMatrix& projection, const RowMatrix& rows) {
  if (static_cast<std::size_t>(rows.cols()) != projection.input_dim()) {
    fail(ErrorCode::kShapeMismatch, "rows do not match the projection input dim");
  }
  return rows * projection.basis;
}

Dataset project_dataset(const ProjectionMatrix& projection, const Dataset& data) {
  return data.with_features(project_rows(projection, data.features()));
}

void save_projection(const std::filesystem::path& path,
                     const ProjectionMatrix& projection) {
  BinaryWriter out(path);
  out.raw("DPCA");
  out.u32(kProjectionVersion);
  out.u32(static_cast<std::uint32_t>(projection.input_dim()));
  out.u32(static_cast<std::uint32_t>(projection.output_dim()));
  out.f64s(std::span<const double>(projection.basis.data(),
                                   static_cast<std::size_t>(projection.basis.size())));
  out.f64s(std::span<const double>(projection.eigenvalues.data(),
                                   static_cast<std::size_t>(projection.eigenvalues.size())));
  out.close();
}

ProjectionMatrix load_projection(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic("DPCA");
  const std::uint32_t version = in.u32();
  if (version != kProjectionVersion) {
    fail(ErrorCode::kBadMagic, path.string() + ": unsupported projection version " +
                                   std::to_string(version));
  }
  const std::uint32_t d = in.u32();
  const std::uint32_t k = in.u32();
  if (k == 0 || k > d) {
    fail(ErrorCode::kIoError, path.string() + ": invalid projection shape");
  }
  ProjectionMatrix projection;
  projection.basis.resize(d, k);
  projection.eigenvalues.resize(k);
  in.f64s(std::span<double>(projection.basis.data(),
                            static_cast<std::size_t>(projection.basis.size())));
  in.f64s(std::span<double>(projection.eigenvalues.data(), k));
  in.expect_end();
  return projection;
}

}  // namespace dptk
