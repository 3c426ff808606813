#pragma once

#include "repsim/distributional.hpp"
#include "repsim/model.hpp"
#include "repsim/rng.hpp"

namespace repsim::testing {

inline ModelTable random_model(Rng& rng, int n, int k, int M, double scale = 1.0) {
  ModelTable m;
  m.embeddings.resize(n, M);
  m.unembeddings.resize(k, M);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < M; ++c) m.embeddings(i, c) = scale * rng.normal();
  for (int j = 0; j < k; ++j)
    for (int c = 0; c < M; ++c) m.unembeddings(j, c) = scale * rng.normal();
  m.input_ids = ModelTable::default_ids("x", n);
  m.label_ids = ModelTable::default_ids("y", k);
  return m;
}

inline Matrix random_invertible(Rng& rng, int M) {
  while (true) {
    Matrix a(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) a(i, j) = rng.normal();
    if (std::abs(a.determinant()) > 0.1) return a;
  }
}

/// Rows transformed to zero mean and identity sample covariance. Rotation
/// invariance of the standardized cross-covariance spectrum is exact only
/// for uncorrelated components, so invariance tests whiten first.
inline Matrix whiten(const Matrix& rows) {
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(rows.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Matrix isqrt = es.eigenvectors() *
                       es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  return centered * isqrt;
}

/// Deterministic pivots: y0 = 0, excluded = k-1, x0 = 0, inputs 1..M.
/// Feasible with probability one for generic models.
inline PivotConfig fixed_pivots(int n, int k, int M) {
  PivotConfig p;
  p.x0 = 0;
  for (int i = 1; i <= M; ++i) p.x_llv.push_back(i);
  p.y0 = 0;
  p.excluded_label = k - 1;
  for (int y = 0; y < k - 1; ++y) p.y_llv.push_back(y);
  p.validate(n, k, M);
  return p;
}

}  // namespace repsim::testing
