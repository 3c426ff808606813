#include "repsim/model.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace repsim {

std::vector<std::string> ModelTable::default_ids(const char* prefix, int count) {
  std::vector<std::string> ids(count);
  for (int i = 0; i < count; ++i) ids[i] = std::string(prefix) + std::to_string(i);
  return ids;
}

void ModelTable::validate() const {
  const int n = n_inputs(), k = n_labels(), M = dim();
  if (M < 1) throw std::invalid_argument("ModelTable: representation dimension must be positive");
  if (unembeddings.cols() != M)
    throw std::invalid_argument("ModelTable: embeddings and unembeddings disagree on dimension");
  if (n < M + 1 || k < M + 1)
    throw std::invalid_argument("ModelTable: need at least M+1 inputs and M+1 labels");
  if (!embeddings.allFinite() || !unembeddings.allFinite())
    throw std::invalid_argument("ModelTable: non-finite entry");
  if (!input_ids.empty() && static_cast<int>(input_ids.size()) != n)
    throw std::invalid_argument("ModelTable: input_ids size mismatch");
  if (!label_ids.empty() && static_cast<int>(label_ids.size()) != k)
    throw std::invalid_argument("ModelTable: label_ids size mismatch");
}

void CondLogProb::validate(double row_tol, double weight_tol) const {
  const int n = n_inputs();
  if (input_weights.size() != n)
    throw std::invalid_argument("CondLogProb: weight vector size mismatch");
  for (int i = 0; i < n; ++i) {
    if (input_weights[i] < 0.0)
      throw std::invalid_argument("CondLogProb: negative input weight");
    double s = 0.0;
    for (int j = 0; j < n_labels(); ++j) s += std::exp(logp(i, j));
    if (std::abs(s - 1.0) > row_tol) {
      std::ostringstream msg;
      msg << "CondLogProb: row " << i << " sums to " << s;
      throw std::invalid_argument(msg.str());
    }
  }
  if (std::abs(input_weights.sum() - 1.0) > weight_tol)
    throw std::invalid_argument("CondLogProb: input weights do not sum to 1");
}

void PivotConfig::validate(int n, int k, int M) const {
  auto fail = [](const std::string& why) {
    throw std::invalid_argument("PivotConfig: " + why);
  };
  if (x0 < 0 || x0 >= n) fail("pivot input out of range");
  if (y0 < 0 || y0 >= k) fail("pivot label out of range");
  if (excluded_label < 0 || excluded_label >= k) fail("excluded label out of range");
  if (excluded_label == y0) fail("pivot label cannot be the excluded label");
  if (static_cast<int>(x_llv.size()) != M) fail("input set must have exactly M entries");
  if (static_cast<int>(y_llv.size()) != k - 1) fail("label set must have k-1 entries");
  std::vector<char> seen_x(n, 0);
  seen_x[x0] = 1;
  for (int x : x_llv) {
    if (x < 0 || x >= n) fail("input index out of range");
    if (seen_x[x]) fail("duplicate input index (or x0 reused)");
    seen_x[x] = 1;
  }
  std::vector<char> seen_y(k, 0);
  bool has_y0 = false;
  for (int y : y_llv) {
    if (y < 0 || y >= k) fail("label index out of range");
    if (y == excluded_label) fail("excluded label present in label set");
    if (seen_y[y]) fail("duplicate label index");
    seen_y[y] = 1;
    has_y0 |= (y == y0);
  }
  if (!has_y0) fail("pivot label missing from label set");
}

std::vector<int> PivotConfig::projection_labels(int M) const {
  std::vector<int> out;
  out.reserve(M);
  for (int y : y_llv) {
    if (y == y0) continue;
    out.push_back(y);
    if (static_cast<int>(out.size()) == M) break;
  }
  if (static_cast<int>(out.size()) != M)
    throw std::invalid_argument("PivotConfig: fewer than M labels available for projections (k >= M+2 required)");
  return out;
}

Vector uniform_weights(int n) {
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

CondLogProb cond_log_probs(const ModelTable& model, const Vector& weights) {
  model.validate();
  const int n = model.n_inputs(), k = model.n_labels();
  if (weights.size() != n)
    throw std::invalid_argument("cond_log_probs: weight vector size mismatch");
  double wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("cond_log_probs: negative weight");
    wsum += weights[i];
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("cond_log_probs: weights must sum to 1");

  CondLogProb out;
  out.logp.resize(n, k);
  out.input_weights = weights;

  const int M = model.dim();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      // plain loop: summation order matches the serial reference kernel
      double logit = 0.0;
      for (int c = 0; c < M; ++c) logit += model.embeddings(i, c) * model.unembeddings(j, c);
      out.logp(i, j) = logit;
    }
  }
  if (!out.logp.allFinite()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j)
        if (!std::isfinite(out.logp(i, j))) {
          std::ostringstream msg;
          msg << "cond_log_probs: non-finite logit at input " << i << ", label " << j;
          throw std::invalid_argument(msg.str());
        }
  }

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double mx = out.logp(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, out.logp(i, j));
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += std::exp(out.logp(i, j) - mx);
    const double lse = mx + std::log(acc);
    for (int j = 0; j < k; ++j) out.logp(i, j) -= lse;
  }
  return out;
}

CondLogProb cond_log_probs(const ModelTable& model) {
  return cond_log_probs(model, uniform_weights(model.n_inputs()));
}

DisplacedTables displaced(const ModelTable& model, const PivotConfig& pivots) {
  pivots.validate(model.n_inputs(), model.n_labels(), model.dim());
  DisplacedTables out;
  out.f0 = model.embeddings.rowwise() - model.embeddings.row(pivots.x0);
  out.g0 = model.unembeddings.rowwise() - model.unembeddings.row(pivots.y0);
  return out;
}

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

DiversityCheck check_diversity(const ModelTable& model, const PivotConfig& pivots,
                               double cond_cap) {
  const auto tables = displaced(model, pivots);
  const int M = model.dim();
  Matrix L(M, M), N(M, M);
  const auto l_labels = pivots.projection_labels(M);
  for (int i = 0; i < M; ++i) L.col(i) = tables.g0.row(l_labels[i]).transpose();
  for (int j = 0; j < M; ++j) N.col(j) = tables.f0.row(pivots.x_llv[j]).transpose();
  DiversityCheck out;
  out.l_cond = condition_number(L);
  out.n_cond = condition_number(N);
  out.ok = out.l_cond < cond_cap && out.n_cond < cond_cap;
  return out;
}

ProjectionMatrices build_projections(const ModelTable& model, const PivotConfig& pivots,
                                     double cond_cap) {
  const auto tables = displaced(model, pivots);
  const int M = model.dim();
  ProjectionMatrices out;
  out.l_labels = pivots.projection_labels(M);
  out.n_inputs = pivots.x_llv;
  out.L.resize(M, M);
  out.N.resize(M, M);
  for (int i = 0; i < M; ++i) out.L.col(i) = tables.g0.row(out.l_labels[i]).transpose();
  for (int j = 0; j < M; ++j) out.N.col(j) = tables.f0.row(out.n_inputs[j]).transpose();
  out.l_cond = condition_number(out.L);
  out.n_cond = condition_number(out.N);
  if (out.l_cond >= cond_cap) {
    std::ostringstream msg;
    msg << "build_projections: singular L, condition number " << out.l_cond;
    throw std::runtime_error(msg.str());
  }
  if (out.n_cond >= cond_cap) {
    std::ostringstream msg;
    msg << "build_projections: singular N, condition number " << out.n_cond;
    throw std::runtime_error(msg.str());
  }
  return out;
}

ModelTable apply_equivalence(const ModelTable& model, const Matrix& A) {
  model.validate();
  const int M = model.dim();
  if (A.rows() != M || A.cols() != M)
    throw std::invalid_argument("apply_equivalence: A must be M x M");
  if (condition_number(A) >= kDefaultCondCap)
    throw std::invalid_argument("apply_equivalence: A is singular");
  ModelTable out = model;
  const Matrix Ainv = A.inverse();
  out.embeddings = model.embeddings * Ainv.transpose();  // rows f'(x) = A^{-1} f(x)
  out.unembeddings = model.unembeddings * A;             // rows g'(y) = A^T g(y)
  return out;
}

double nll(const ModelTable& model, const std::vector<int>& labels, const Vector& weights) {
  const auto dist = cond_log_probs(model, weights);
  if (static_cast<int>(labels.size()) != model.n_inputs())
    throw std::invalid_argument("nll: one assigned label per input required");
  double acc = 0.0;
  for (int i = 0; i < model.n_inputs(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= model.n_labels()) throw std::invalid_argument("nll: label out of range");
    acc -= weights[i] * dist.logp(i, y);
  }
  return acc;
}

}  // namespace repsim
