#pragma once

#include "repsim/model.hpp"

namespace repsim {

/// s samples of an M-dimensional random vector, one per row, with sample
/// weights summing to 1. All moments below are weighted population moments.
struct SampleMatrix {
  Matrix rows;     // s x M
  Vector weights;  // s

  int n_samples() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
  void validate() const;

  static SampleMatrix uniform(Matrix rows);
};

Vector weighted_mean(const SampleMatrix& s);
Vector weighted_variance(const SampleMatrix& s);

/// Per-component standardization to weighted mean 0, variance 1.
/// Throws when a component has no variance (names the component).
SampleMatrix standardize(const SampleMatrix& samples);

/// Weighted population cross-covariance of jointly sampled z, w.
Matrix cross_covariance(const SampleMatrix& z, const SampleMatrix& w);

struct SvdResult {
  Matrix left;             // M x M, orthonormal columns u_i
  Matrix right;            // M x M, orthonormal columns v_i
  Vector singular_values;  // nonincreasing, nonnegative
};

/// Full SVD with the sign convention that every extracted pair has
/// nonnegative covariance u_i^T sigma v_i and a canonical orientation.
SvdResult pls_svd(const Matrix& sigma);

/// Same decomposition via iterative rank-one deflation (extract the leading
/// pair, subtract sigma_r u v^T, repeat). Kept as an independently checkable
/// route; agrees with pls_svd to numerical precision.
SvdResult pls_svd_deflation(const Matrix& sigma);

/// Mean extracted covariance between the standardized projections,
/// equal to the mean singular value of the standardized cross-covariance.
double m_svd(const SampleMatrix& z, const SampleMatrix& w);
double d_svd(const SampleMatrix& z, const SampleMatrix& w);  // 1 - m_svd

/// Mean canonical correlation: mean singular value of
/// Szz^{-1/2} Szw Sww^{-1/2}. Invariant to invertible linear maps of either
/// side. Throws when a within-set covariance is singular.
double m_cca(const SampleMatrix& z, const SampleMatrix& w);

/// Residual norms of the best affine fit w ~ B z + c, one per sample.
/// Requires more samples than dimensions; throws on rank-deficient designs.
Vector linear_fit_residuals(const SampleMatrix& z, const SampleMatrix& w);

}  // namespace repsim
