#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repsim/model.hpp"

namespace repsim {

/// Two models on a common grid, prepared for comparison. The grids must
/// agree element-for-element (same inputs, same labels, same weights).
struct ModelPair {
  ModelTable a;
  ModelTable b;
  CondLogProb pa;
  CondLogProb pb;

  int n_inputs() const { return pa.n_inputs(); }
  int n_labels() const { return pa.n_labels(); }
  int dim() const { return a.dim(); }

  static ModelPair make(ModelTable a, ModelTable b);
  static ModelPair make(ModelTable a, ModelTable b, Vector weights);
};

/// Expected conditional KL divergence under the input weights,
/// sum_x w(x) sum_y p(y|x) (log p - log q). Nonnegative, asymmetric.
double d_kl(const CondLogProb& p, const CondLogProb& q);

/// Standard deviations of pivot-referenced log-likelihood ratios.
/// psi_x(y) = std over inputs (weighted) of log p(y|x) - log p(y0|x),
/// psi_y(x) = std over the label set (uniform) of log p(y|x) - log p(y|x0).
/// Entries are strictly positive for admissible distributions; zero entries
/// are recorded as violations rather than thrown.
struct PsiTerms {
  Vector psi_x;                     // size k-2, over y_llv minus y0
  std::vector<int> psi_x_labels;    // label index per entry
  Vector psi_y;                     // size M, over x_llv
  std::vector<int> psi_y_inputs;    // input index per entry
  std::vector<int> violations_x;    // labels whose psi_x vanished
  std::vector<int> violations_y;    // inputs whose psi_y vanished
  bool ok() const { return violations_x.empty() && violations_y.empty(); }
};

PsiTerms psi_terms(const CondLogProb& p, const PivotConfig& pivots,
                   double psi_floor = 1e-12);

struct LlvReport {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
  double lambda = 0.0;
  double value = 0.0;  // max{t1, t2, lambda*t3, lambda*t4}
  PivotConfig pivots;
  std::vector<std::string> diagnostics;
};

inline constexpr double kDefaultLambda = 1e-5;

/// Log-likelihood variance distance between the two distributions on fixed
/// pivots. Throws when either distribution has a vanishing psi term on
/// these pivots (the error names the offending terms).
LlvReport d_llv(const CondLogProb& p, const CondLogProb& q, const PivotConfig& pivots,
                double lambda = kDefaultLambda, double psi_floor = 1e-12);

struct PivotSearchOptions {
  int n_input_sets = 200;
  std::uint64_t seed = 0;
  double cond_cap = kDefaultCondCap;
  double psi_floor = 1e-12;
};

/// Pivot selection for a comparison group sharing one grid. Scores every
/// ordered (y0, excluded_label) pair by the worst t1 over all unordered
/// model pairs and keeps the minimizer, then scores randomly drawn input
/// sets of size M+1 by the worst t2 and keeps the minimizer. Candidates
/// that violate diversity or have vanishing psi terms for any group member
/// are skipped. Deterministic given the seed; ties resolve to the lowest
/// (y0, excluded, candidate) index.
PivotConfig select_pivots_group(const std::vector<const ModelTable*>& models,
                                const std::vector<const CondLogProb*>& dists,
                                const PivotSearchOptions& options);
PivotConfig select_pivots(const ModelPair& pair, const PivotSearchOptions& options = {});

}  // namespace repsim
