#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repsim/distributional.hpp"
#include "repsim/model.hpp"

namespace repsim {

/// 2-D Gaussian samples labeled by angle: the half-plane angle is cut into
/// c slices of width pi/c with boundaries at j*pi/c, and antipodal points
/// share a label. c must be even.
struct AngularDataset {
  Matrix points;            // n x 2
  std::vector<int> labels;  // n, in [0, c)
  int n_classes = 0;
  double sigma = 3.0;
  std::uint64_t seed = 0;
};

AngularDataset gen_angular_data(int n_classes, int n = 20000, double sigma = 3.0,
                                std::uint64_t seed = 0);

/// Slice rule used by gen_angular_data, exposed for tests.
int angular_label(double x, double y, int n_classes);

enum class NormConstraint { kNone, kEmb20, kUnemb20, kBoth20 };

struct TrainConfig {
  int width = 64;            // hidden size of the three hidden layers
  int n_classes = 4;
  int batch = 128;
  int steps = 15000;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double leaky_slope = 0.01;
  NormConstraint constraint = NormConstraint::kNone;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Embedding network x -> R^2: three hidden LeakyReLU layers and a linear
/// output. The unembedding is a free c x 2 matrix; logits are inner
/// products f(x)^T g(y).
struct MlpParams {
  std::vector<Matrix> w;  // layer weights, out x in
  std::vector<Vector> b;  // layer biases
  Matrix unembeddings;    // c x 2
  double leaky_slope = 0.01;
  bool normalize_embedding = false;  // project f(x) to norm 20 in the forward pass

  int width() const { return static_cast<int>(w[0].rows()); }
  int n_classes() const { return static_cast<int>(unembeddings.rows()); }

  static MlpParams init(const TrainConfig& config, std::uint64_t seed);
};

/// Forward pass of the embedding network for a batch of inputs.
Matrix mlp_forward(const MlpParams& params, const Matrix& x);

/// Gradients of the mean cross-entropy over a batch, exact backprop.
struct MlpGradients {
  std::vector<Matrix> w;
  std::vector<Vector> b;
  Matrix unembeddings;
};
struct BatchLoss {
  double loss = 0.0;
  MlpGradients grads;
};
BatchLoss mlp_backward(const MlpParams& params, const Matrix& x, const std::vector<int>& y);

/// Flat views used by the finite-difference gradient check.
std::vector<double*> parameter_views(MlpParams& params);
double batch_loss_only(const MlpParams& params, const Matrix& x, const std::vector<int>& y);

struct TrainedModel {
  MlpParams params;
  std::vector<double> loss_curve;  // one entry per step
  double final_accuracy = 0.0;     // on the held-out split
  TrainConfig config;

  /// Evaluate the network on a grid to obtain a finite model table.
  ModelTable to_table(const Matrix& inputs) const;
};

TrainedModel train(const TrainConfig& config, const AngularDataset& data);

/// Indices of the held-out split for a dataset (deterministic in the
/// dataset seed, shared by every model trained on it).
std::vector<int> holdout_indices(const AngularDataset& data, double fraction);

struct WidthSweepOptions {
  std::vector<int> widths{16, 32, 64, 128, 256};
  int n_seeds = 20;
  int steps = 15000;
  int eval_grid_size = 2000;
  double retain_accuracy = 0.9;
  int min_retained = 5;
  double lambda = kDefaultLambda;
  std::uint64_t data_seed = 0;
  int data_size = 20000;
  double data_sigma = 3.0;
};

struct WidthSweepRow {
  int n_classes = 0;
  int width = 0;
  int n_retained = 0;
  double mean_d_llv = 0.0;
  double std_d_llv = 0.0;
  double mean_max_d_svd = 0.0;
  double std_max_d_svd = 0.0;
  bool skipped = false;        // fewer than min_retained models
  std::string note;
  std::vector<double> pairwise_d_llv;      // retained for downstream checks
  std::vector<double> pairwise_max_d_svd;
  std::vector<double> pairwise_epsilon;    // d_llv per pair (bound lhs/rhs inputs)
  std::vector<std::uint8_t> pairwise_bound_holds;
  std::vector<std::uint8_t> pairwise_bound_vacuous;
};

/// Trains n_seeds models per width, retains those above the accuracy
/// threshold, evaluates all of them on one shared held-out grid, and
/// reports pairwise distance statistics per width (shared pivots per width
/// group). Widths with too few retained models are reported as skipped.
std::vector<WidthSweepRow> width_sweep(int n_classes, const WidthSweepOptions& options);

}  // namespace repsim
