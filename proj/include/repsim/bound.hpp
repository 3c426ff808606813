#pragma once

#include <string>
#include <vector>

#include "repsim/distributional.hpp"
#include "repsim/representational.hpp"

namespace repsim {

/// Error vector comparing the two models' psi-normalized log-likelihood
/// ratios at one input; entry i corresponds to the i-th projection label.
/// Vanishes identically when the distributions coincide.
Vector epsilon_y_vector(const ModelPair& pair, const PivotConfig& pivots, int x_index,
                        double psi_floor = 1e-12);

/// Mirror of epsilon_y_vector on the unembedding side: entry j compares the
/// normalized log ratios log p(y|x_j) - log p(y|x_0) at one label.
Vector epsilon_x_vector(const ModelPair& pair, const PivotConfig& pivots, int y_index,
                        double psi_floor = 1e-12);

/// Exact reconstruction of one model's representations from the other's
/// plus the error term:
///   f(x)  = A~ f'(x) + L^{-T} S^{-1} eps_y(x)
///   g0(y) = B g0'(y) + N^{-T} D^{-1} (eps_x(y) - eps_x(y0))
/// The unembedding identity is stated for the displaced tables; the plain
/// tables differ by a constant offset coming from the partition functions.
struct ReconstructionCheck {
  double max_f_error = 0.0;
  double max_g_error = 0.0;
};
ReconstructionCheck check_reconstruction(const ModelPair& pair, const PivotConfig& pivots);

/// Per-component check of Var[eps] = 2 (1 - Corr[.,.]) on both sides.
struct VarCorrRow {
  int component = 0;  // projection label (embedding side) or input (unembedding side)
  double var_eps = 0.0;
  double two_one_minus_corr = 0.0;
  double gap = 0.0;
};
struct VarCorrReport {
  std::vector<VarCorrRow> embedding;    // over projection labels, Var over inputs
  std::vector<VarCorrRow> unembedding;  // over projected inputs, Var over y_llv
  double max_gap = 0.0;
};
VarCorrReport var_corr_identity(const ModelPair& pair, const PivotConfig& pivots);

/// Checked implication: d_llv <= eps forces both projected d_svd values
/// under 2*M*eps. `vacuous` marks certificates whose right side reaches 1.
struct BoundCertificate {
  double epsilon = 0.0;   // d_llv value on these pivots
  double lhs_emb = 0.0;   // d_svd(L^T f, L'^T f')
  double lhs_unemb = 0.0; // d_svd(N^T g, N'^T g') over the label set
  double rhs = 0.0;       // 2 * M * epsilon
  bool holds = false;
  bool vacuous = false;
  bool preconditions_ok = false;
  std::vector<std::string> diagnostics;
  PivotConfig pivots;
  LlvReport llv;
};

struct BoundOptions {
  double lambda = kDefaultLambda;
  double cond_cap = kDefaultCondCap;
  double slack = 1e-9;  // absolute slack absorbing summation order
  // Invertibility of L is also probed on randomly resampled M-subsets of
  // the label set (full quantification over all subsets is combinatorial).
  int diversity_resamples = 8;
  std::uint64_t resample_seed = 0;
};

/// Projected joint samples entering the certificate: embeddings under L^T
/// over the input weights, unembeddings under N^T over the label set
/// (uniform). Precondition failures produce a diagnostic certificate with
/// holds undefined (false) rather than an error, so sweeps can report
/// coverage.
BoundCertificate verify_bound(const ModelPair& pair, const PivotConfig& pivots,
                              const BoundOptions& options = {});

/// Projected sample builders shared by the certificate and by tests.
SampleMatrix projected_embeddings(const ModelTable& model, const CondLogProb& dist,
                                  const PivotConfig& pivots);
SampleMatrix projected_unembeddings(const ModelTable& model, const PivotConfig& pivots);

}  // namespace repsim
