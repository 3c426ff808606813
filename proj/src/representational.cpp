#include "repsim/representational.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace repsim {

namespace {

void require_joint(const SampleMatrix& z, const SampleMatrix& w) {
  if (z.n_samples() != w.n_samples())
    throw std::invalid_argument("mismatched sample counts (joint samples required)");
  if ((z.weights - w.weights).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("mismatched sample weights (joint samples required)");
}

// Deterministic sign: orient each (u_i, v_i) pair so the largest-magnitude
// entry of u_i is positive; the extracted covariance u^T sigma v stays
// nonnegative because both columns flip together.
void canonicalize_signs(Matrix& U, Matrix& V) {
  for (int c = 0; c < U.cols(); ++c) {
    int arg = 0;
    U.col(c).cwiseAbs().maxCoeff(&arg);
    if (U(arg, c) < 0.0) {
      U.col(c) = -U.col(c);
      V.col(c) = -V.col(c);
    }
  }
}

}  // namespace

void SampleMatrix::validate() const {
  if (n_samples() < 2) throw std::invalid_argument("SampleMatrix: need at least two samples");
  if (!rows.allFinite()) throw std::invalid_argument("SampleMatrix: non-finite entry");
  if (weights.size() != n_samples())
    throw std::invalid_argument("SampleMatrix: weight vector size mismatch");
  if (std::abs(weights.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("SampleMatrix: weights must sum to 1");
}

SampleMatrix SampleMatrix::uniform(Matrix rows) {
  SampleMatrix out;
  out.weights = uniform_weights(static_cast<int>(rows.rows()));
  out.rows = std::move(rows);
  return out;
}

Vector weighted_mean(const SampleMatrix& s) {
  return s.rows.transpose() * s.weights;
}

Vector weighted_variance(const SampleMatrix& s) {
  const Vector mu = weighted_mean(s);
  Vector out = Vector::Zero(s.dim());
  for (int i = 0; i < s.n_samples(); ++i) {
    const Vector d = s.rows.row(i).transpose() - mu;
    out += s.weights[i] * d.cwiseProduct(d);
  }
  return out;
}

SampleMatrix standardize(const SampleMatrix& samples) {
  samples.validate();
  const Vector mu = weighted_mean(samples);
  const Vector var = weighted_variance(samples);
  for (int c = 0; c < samples.dim(); ++c) {
    if (var[c] <= 0.0) {
      std::ostringstream msg;
      msg << "standardize: component " << c << " has zero variance";
      throw std::runtime_error(msg.str());
    }
  }
  SampleMatrix out = samples;
  const Vector inv_std = var.cwiseSqrt().cwiseInverse();
  out.rows = (samples.rows.rowwise() - mu.transpose()).array().rowwise() *
             inv_std.transpose().array();
  return out;
}

Matrix cross_covariance(const SampleMatrix& z, const SampleMatrix& w) {
  z.validate();
  w.validate();
  require_joint(z, w);
  const Vector mz = weighted_mean(z);
  const Vector mw = weighted_mean(w);
  Matrix out = Matrix::Zero(z.dim(), w.dim());
  for (int i = 0; i < z.n_samples(); ++i) {
    const Vector dz = z.rows.row(i).transpose() - mz;
    const Vector dw = w.rows.row(i).transpose() - mw;
    out += z.weights[i] * dz * dw.transpose();
  }
  return out;
}

SvdResult pls_svd(const Matrix& sigma) {
  if (!sigma.allFinite()) throw std::invalid_argument("pls_svd: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdResult out;
  out.left = svd.matrixU();
  out.right = svd.matrixV();
  out.singular_values = svd.singularValues();
  canonicalize_signs(out.left, out.right);
  return out;
}

SvdResult pls_svd_deflation(const Matrix& sigma) {
  if (!sigma.allFinite()) throw std::invalid_argument("pls_svd_deflation: non-finite input");
  const int M = static_cast<int>(sigma.rows());
  Matrix C = sigma;
  SvdResult out;
  out.left.resize(M, M);
  out.right.resize(M, M);
  out.singular_values.resize(M);
  for (int r = 0; r < M; ++r) {
    Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double s = svd.singularValues()[0];
    Vector u = svd.matrixU().col(0);
    Vector v = svd.matrixV().col(0);
    out.singular_values[r] = s;
    out.left.col(r) = u;
    out.right.col(r) = v;
    C -= s * u * v.transpose();  // deflate the extracted pair
  }
  canonicalize_signs(out.left, out.right);
  return out;
}

double m_svd(const SampleMatrix& z, const SampleMatrix& w) {
  const Matrix sigma = cross_covariance(standardize(z), standardize(w));
  const auto svd = pls_svd(sigma);
  return svd.singular_values.sum() / static_cast<double>(svd.singular_values.size());
}

double d_svd(const SampleMatrix& z, const SampleMatrix& w) {
  return 1.0 - m_svd(z, w);
}

double m_cca(const SampleMatrix& z, const SampleMatrix& w) {
  const Matrix szz = cross_covariance(z, z);
  const Matrix sww = cross_covariance(w, w);
  const Matrix szw = cross_covariance(z, w);
  const auto inv_sqrt = [](const Matrix& a, const char* side) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    const Vector vals = es.eigenvalues();
    if (vals.minCoeff() <= 0.0 || vals.maxCoeff() / vals.minCoeff() >= kDefaultCondCap) {
      std::ostringstream msg;
      msg << "m_cca: singular within-set covariance (" << side << ")";
      throw std::runtime_error(msg.str());
    }
    return Matrix(es.eigenvectors() * vals.cwiseSqrt().cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose());
  };
  const Matrix K = inv_sqrt(szz, "left") * szw * inv_sqrt(sww, "right");
  Eigen::JacobiSVD<Matrix> svd(K);
  return svd.singularValues().sum() / static_cast<double>(svd.singularValues().size());
}

Vector linear_fit_residuals(const SampleMatrix& z, const SampleMatrix& w) {
  z.validate();
  w.validate();
  require_joint(z, w);
  const int s = z.n_samples(), M = z.dim();
  if (s <= M) throw std::invalid_argument("linear_fit_residuals: need more samples than dimensions");
  // weighted least squares on the affine design [z 1]
  Matrix design(s, M + 1);
  design.leftCols(M) = z.rows;
  design.col(M).setOnes();
  const Vector sw = z.weights.cwiseSqrt();
  const Matrix dw = design.array().colwise() * sw.array();
  const Matrix yw = w.rows.array().colwise() * sw.array();
  Eigen::JacobiSVD<Matrix> svd(dw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0 || smax / smin >= kDefaultCondCap)
    throw std::runtime_error("linear_fit_residuals: rank-deficient design");
  const Matrix coef = svd.solve(yw);
  const Matrix resid = w.rows - design * coef;
  return resid.rowwise().norm();
}

}  // namespace repsim
