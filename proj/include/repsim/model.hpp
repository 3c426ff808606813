#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace repsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A model (f, g) materialized on a finite input grid and label set.
/// Row i of `embeddings` is f(x_i), row j of `unembeddings` is g(y_j);
/// both live in R^M. Identifiers are opaque and only used for I/O and
/// grid-compatibility checks.
struct ModelTable {
  Matrix embeddings;    // n x M
  Matrix unembeddings;  // k x M
  std::vector<std::string> input_ids;  // size n
  std::vector<std::string> label_ids;  // size k

  int n_inputs() const { return static_cast<int>(embeddings.rows()); }
  int n_labels() const { return static_cast<int>(unembeddings.rows()); }
  int dim() const { return static_cast<int>(embeddings.cols()); }

  /// Throws std::invalid_argument when entries are non-finite, dimensions
  /// disagree, or n or k fall below M+1.
  void validate() const;

  static std::vector<std::string> default_ids(const char* prefix, int count);
};

/// Matrix of log p(y|x) over the grid, plus the empirical input weights.
/// Every row log-sum-exps to zero.
struct CondLogProb {
  Matrix logp;           // n x k
  Vector input_weights;  // n, nonnegative, sums to 1

  int n_inputs() const { return static_cast<int>(logp.rows()); }
  int n_labels() const { return static_cast<int>(logp.cols()); }
  void validate(double row_tol = 1e-10, double weight_tol = 1e-12) const;
};

/// Pivot choice shared by every quantity derived from one comparison:
/// pivot input x0, the M-element input set, pivot label y0, and the label
/// set containing all labels except `excluded_label` (y0 included).
struct PivotConfig {
  int x0 = -1;
  std::vector<int> x_llv;  // M input indices, x0 not among them
  int y0 = -1;
  std::vector<int> y_llv;  // k-1 label indices in ascending order, y0 among them
  int excluded_label = -1;

  void validate(int n, int k, int M) const;

  /// Labels used as projection columns: y_llv minus y0, first M in y_llv order.
  std::vector<int> projection_labels(int M) const;
};

/// L has columns g0(y_i) over projection_labels, N has columns f0(x_j) over
/// x_llv; both M x M and invertible below the condition-number cap.
struct ProjectionMatrices {
  Matrix L;
  Matrix N;
  std::vector<int> l_labels;
  std::vector<int> n_inputs;
  double l_cond = 0.0;
  double n_cond = 0.0;
};

struct DiversityCheck {
  bool ok = false;
  double l_cond = 0.0;
  double n_cond = 0.0;
};

inline constexpr double kDefaultCondCap = 1e12;

/// Conditional distribution of the model under softmax of f(x)^T g(y),
/// evaluated with max-subtracted log-sum-exp.
CondLogProb cond_log_probs(const ModelTable& model, const Vector& weights);
CondLogProb cond_log_probs(const ModelTable& model);  // uniform weights

Vector uniform_weights(int n);

/// Displaced tables f0(x) = f(x) - f(x0) and g0(y) = g(y) - g(y0).
struct DisplacedTables {
  Matrix f0;  // n x M
  Matrix g0;  // k x M
};
DisplacedTables displaced(const ModelTable& model, const PivotConfig& pivots);

/// Diversity holds when both {f0(x_j)} and {g0(y_i)} span R^M, judged by
/// condition number below the cap. Degeneracy is reported, never thrown.
DiversityCheck check_diversity(const ModelTable& model, const PivotConfig& pivots,
                               double cond_cap = kDefaultCondCap);

ProjectionMatrices build_projections(const ModelTable& model, const PivotConfig& pivots,
                                     double cond_cap = kDefaultCondCap);

/// The equivalent model f' = A^{-1} f, g' = A^T g; its conditional
/// distribution matches the input model's exactly.
ModelTable apply_equivalence(const ModelTable& model, const Matrix& A);

/// Weighted mean of -log p(y_i|x_i) over the assigned labels.
double nll(const ModelTable& model, const std::vector<int>& labels, const Vector& weights);

double condition_number(const Matrix& m);

}  // namespace repsim
