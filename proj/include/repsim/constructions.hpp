#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "repsim/distributional.hpp"
#include "repsim/model.hpp"

namespace repsim {

enum class PermutationKind { kTailSwap, kLastLabel, kCircle };

/// Label permutation pi applied as g'(y_i) = g(y_pi(i)); embeddings whose
/// top label moves follow their unembedding.
struct PermutationSpec {
  std::vector<int> pi;
  PermutationKind kind = PermutationKind::kCircle;

  void validate(int k) const;
  static PermutationSpec identity(int k);
  /// Swap of two clusters, by default the first non-adjacent pair (0, 2).
  static PermutationSpec circle_swap(int k, int first = 0, int second = 2);
};

/// A constructed model pair on one shared grid. `labels` assigns each input
/// its cluster label (equal to both models' top label by construction).
/// `data_weights` is the empirical input distribution used for every
/// distributional quantity; geometric witness points (the truncated
/// boundary sequences of the fixed-norm family) carry zero weight so the
/// data distribution stays supported on the clusters.
struct ConstructedPair {
  ModelTable a;
  ModelTable b;
  std::vector<int> labels;
  Vector data_weights;
  std::vector<std::uint8_t> is_witness;  // 1 for zero-weight sequence points

  ModelPair pair() const { return ModelPair::make(a, b, data_weights); }
};

/// Fixed-norm counterexample family: unembeddings rho*e_i plus -rho*e_1
/// (and -rho*e_2 when k = M+2), two truncated input sequences converging to
/// the 3pi/4 direction from both sides, and per-label embedding clusters.
/// The second model swaps the last unembeddings and rotates the affected
/// clusters so norms and top-label angles are preserved.
struct FixedNormPairParams {
  int M = 2;
  int k = 4;  // M+1 or M+2
  double rho = 3.0;
  int truncation = 50;       // points per boundary sequence
  int points_per_label = 40;
  double cluster_jitter = 0.15;  // radians around each label direction
  double radius_sigma = 0.10;    // lognormal spread of embedding norms
  std::uint64_t seed = 1;
};
ConstructedPair build_fixed_norm_pair(const FixedNormPairParams& params);

/// Unembeddings uniform on the circle scaled to norm rho; per-label
/// embedding clusters angularly closest to their own unembedding; the
/// second model permutes clusters together with their unembeddings.
struct CirclePairParams {
  int k = 6;
  double rho = 3.0;
  int points_per_label = 64;
  PermutationSpec permutation;        // defaults to circle_swap(k)
  double margin = 0.0;                // slice margin; 0 -> 2*pi/(3k)
  double radius_scale = 1.0;
  double radius_sigma = 0.05;
  bool shared_cluster_shape = false;  // one sampled shape rotated to every label
  std::uint64_t seed = 1;
};
ConstructedPair build_circle_pair(const CirclePairParams& params);

/// Parameters reproducing the vanishing-KL table: the clusters are rotated
/// copies of one sampled shape and the permutation cancels the embedding
/// cross-covariance exactly, so the CCA score stays at the noise floor
/// while the distributions converge.
CirclePairParams table1_circle_params(std::uint64_t seed = 7);

/// Family over rho with the embeddings held bitwise fixed; only the
/// unembedding norms move.
struct RhoFamily {
  std::vector<double> rho_values{3.0, 6.0, 9.0, 12.0, 15.0, 18.0};
  CirclePairParams base;
  void validate() const;
};

struct RhoSweepRecord {
  double rho = 0.0;
  double d_kl_pq = 0.0;
  double d_kl_qp = 0.0;
  double d_llv = 0.0;
  double m_cca = 0.0;
  double max_d_svd = 0.0;
};

/// One record per rho. Pivots are selected once on the smallest-rho pair
/// and reused, so all rows are comparable.
std::vector<RhoSweepRecord> rho_sweep(const RhoFamily& family, double lambda = kDefaultLambda,
                                      const PivotSearchOptions& pivot_options = {});

/// I.i.d. Gaussian noise on the embedding rows; unembeddings untouched.
ModelTable perturb_embeddings(const ModelTable& model, double sigma, std::uint64_t seed);

}  // namespace repsim
