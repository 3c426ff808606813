#include "repsim/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "repsim/bound.hpp"
#include "repsim/representational.hpp"
#include "repsim/rng.hpp"

namespace repsim {

namespace {

constexpr double kPi = std::numbers::pi;

Matrix unit_circle_rows(const std::vector<double>& angles, double norm) {
  Matrix out(static_cast<int>(angles.size()), 2);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    out(static_cast<int>(i), 0) = norm * std::cos(angles[i]);
    out(static_cast<int>(i), 1) = norm * std::sin(angles[i]);
  }
  return out;
}

// Rotation within the first two coordinates, identity elsewhere.
Vector rotate_first_two(const Vector& v, double angle) {
  Vector out = v;
  const double c = std::cos(angle), s = std::sin(angle);
  out[0] = c * v[0] - s * v[1];
  out[1] = s * v[0] + c * v[1];
  return out;
}

int argmax_label(const Matrix& unembeddings, const Vector& f) {
  int best = 0;
  double best_logit = unembeddings.row(0).dot(f);
  for (int j = 1; j < unembeddings.rows(); ++j) {
    const double logit = unembeddings.row(j).dot(f);
    if (logit > best_logit) {
      best_logit = logit;
      best = j;
    }
  }
  return best;
}

Vector witness_aware_weights(const std::vector<std::uint8_t>& is_witness) {
  const int n = static_cast<int>(is_witness.size());
  int n_data = 0;
  for (auto w : is_witness) n_data += (w == 0);
  if (n_data == 0) throw std::logic_error("construction has no data-carrying points");
  Vector out = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    if (!is_witness[i]) out[i] = 1.0 / static_cast<double>(n_data);
  return out;
}

}  // namespace

void PermutationSpec::validate(int k) const {
  if (static_cast<int>(pi.size()) != k)
    throw std::invalid_argument("PermutationSpec: size mismatch");
  std::vector<char> seen(k, 0);
  for (int v : pi) {
    if (v < 0 || v >= k || seen[v])
      throw std::invalid_argument("PermutationSpec: not a bijection");
    seen[v] = 1;
  }
}

PermutationSpec PermutationSpec::identity(int k) {
  PermutationSpec out;
  out.pi.resize(k);
  for (int i = 0; i < k; ++i) out.pi[i] = i;
  return out;
}

PermutationSpec PermutationSpec::circle_swap(int k, int first, int second) {
  if (first == second || first < 0 || second < 0 || first >= k || second >= k)
    throw std::invalid_argument("PermutationSpec: bad swap indices");
  PermutationSpec out = identity(k);
  std::swap(out.pi[first], out.pi[second]);
  return out;
}

ConstructedPair build_fixed_norm_pair(const FixedNormPairParams& params) {
  const int M = params.M, k = params.k;
  if (M < 2) throw std::invalid_argument("build_fixed_norm_pair: M >= 2 required");
  if (k != M + 1 && k != M + 2)
    throw std::invalid_argument(
        "build_fixed_norm_pair: only k = M+1 and k = M+2 are feasible (extra labels cannot keep "
        "the required angular separation)");
  if (params.rho <= 0.0) throw std::invalid_argument("build_fixed_norm_pair: rho must be positive");
  if (params.truncation < 1 || params.points_per_label < 1)
    throw std::invalid_argument("build_fixed_norm_pair: truncation and cluster sizes must be positive");

  // Unembeddings: rho*e_i for the first M labels, then -rho*e_1 (and
  // -rho*e_2 when k = M+2). The second model swaps the tail labels.
  Matrix g1 = Matrix::Zero(k, M);
  for (int i = 0; i < M; ++i) g1(i, i) = params.rho;
  g1(M, 0) = -params.rho;
  if (k == M + 2) g1(M + 1, 1) = -params.rho;

  Matrix g2 = g1;
  if (k == M + 2) {
    g2.row(M) = Vector::Zero(M).transpose();
    g2(M, 1) = -params.rho;  // swapped with the last label
    g2.row(M + 1) = Vector::Zero(M).transpose();
    g2(M + 1, 0) = -params.rho;
  } else {
    g2.row(M) = Vector::Zero(M).transpose();
    g2(M, 1) = -params.rho;
  }

  // Label directions used for the embedding clusters (angles in the first
  // two coordinates; labels 0 and 1 sit on +e1/+e2, the tail on -e1/-e2).
  std::vector<double> label_angle(k, 0.0);
  label_angle[0] = 0.0;
  label_angle[1] = kPi / 2.0;
  label_angle[M] = kPi;
  if (k == M + 2) label_angle[M + 1] = 1.5 * kPi;

  Rng rng(params.seed);
  std::vector<Vector> f1_rows, f2_rows;
  std::vector<int> labels;
  std::vector<std::uint8_t> witness;

  // Two truncated sequences approaching the 3pi/4 direction from both
  // sides. They witness the discontinuity between the two embedding maps
  // and carry no data weight.
  for (int n = 1; n <= params.truncation; ++n) {
    const double theta = kPi - (kPi / 4.0) * (1.0 - 1.0 / static_cast<double>(n));
    Vector f = Vector::Zero(M);
    f[0] = std::cos(theta);
    f[1] = std::sin(theta);
    f1_rows.push_back(f);
    labels.push_back(M);  // top label is -e1
    witness.push_back(1);
  }
  for (int m = 1; m <= params.truncation; ++m) {
    const double theta = 0.75 * kPi - kPi / (4.0 * static_cast<double>(m));
    Vector f = Vector::Zero(M);
    f[0] = std::cos(theta);
    f[1] = std::sin(theta);
    f1_rows.push_back(f);
    labels.push_back(1);  // top label is +e2
    witness.push_back(1);
  }

  // Per-label clusters in the first two coordinates. For labels beyond the
  // planar ones (M > 2) the cluster sits on the axis with planar jitter.
  for (int j = 0; j < k; ++j) {
    for (int t = 0; t < params.points_per_label; ++t) {
      const double radius = std::exp(params.radius_sigma * rng.normal());
      Vector f = Vector::Zero(M);
      if (j < 2 || j >= M) {
        const double theta = label_angle[j] + rng.uniform(-params.cluster_jitter, params.cluster_jitter);
        f[0] = radius * std::cos(theta);
        f[1] = radius * std::sin(theta);
      } else {
        f[j] = radius;
        const double wob = 0.2 * rng.uniform(-params.cluster_jitter, params.cluster_jitter);
        f[0] = radius * wob;
      }
      f1_rows.push_back(f);
      labels.push_back(j);
      witness.push_back(0);
    }
  }

  // Second model's embeddings: identical unless the top label moved, in
  // which case the point rotates (counterclockwise for the -e1 cluster,
  // clockwise for the -e2 cluster) so norms and top-label angles match.
  for (std::size_t i = 0; i < f1_rows.size(); ++i) {
    const int top = argmax_label(g1, f1_rows[i]);
    if (top != labels[i]) {
      std::ostringstream msg;
      msg << "build_fixed_norm_pair: point " << i << " is closest to label " << top
          << " but assigned " << labels[i];
      throw std::logic_error(msg.str());
    }
    if (top == M)
      f2_rows.push_back(rotate_first_two(f1_rows[i], kPi / 2.0));
    else if (k == M + 2 && top == M + 1)
      f2_rows.push_back(rotate_first_two(f1_rows[i], -kPi / 2.0));
    else
      f2_rows.push_back(f1_rows[i]);
  }

  ConstructedPair out;
  const int n = static_cast<int>(f1_rows.size());
  out.a.embeddings.resize(n, M);
  out.b.embeddings.resize(n, M);
  for (int i = 0; i < n; ++i) {
    out.a.embeddings.row(i) = f1_rows[i].transpose();
    out.b.embeddings.row(i) = f2_rows[i].transpose();
  }
  out.a.unembeddings = g1;
  out.b.unembeddings = g2;
  out.a.input_ids = ModelTable::default_ids("x", n);
  out.a.label_ids = ModelTable::default_ids("y", k);
  out.b.input_ids = out.a.input_ids;
  out.b.label_ids = out.a.label_ids;
  out.labels = std::move(labels);
  out.is_witness = std::move(witness);
  out.data_weights = witness_aware_weights(out.is_witness);
  out.a.validate();
  out.b.validate();
  return out;
}

ConstructedPair build_circle_pair(const CirclePairParams& params_in) {
  CirclePairParams params = params_in;
  const int k = params.k;
  if (k < 3) throw std::invalid_argument("build_circle_pair: k >= 3 required");
  if (params.rho <= 0.0) throw std::invalid_argument("build_circle_pair: rho must be positive");
  if (params.points_per_label < 1)
    throw std::invalid_argument("build_circle_pair: points_per_label must be positive");
  if (params.permutation.pi.empty()) params.permutation = PermutationSpec::circle_swap(k);
  params.permutation.validate(k);
  if (params.margin <= 0.0) params.margin = 2.0 * kPi / (3.0 * static_cast<double>(k));
  const double half_slice = kPi / static_cast<double>(k);
  if (params.margin >= half_slice)
    throw std::invalid_argument("build_circle_pair: margin leaves no room inside the slice");
  const double jitter = half_slice - params.margin;

  std::vector<double> angles(k);
  for (int j = 0; j < k; ++j) angles[j] = 2.0 * kPi * j / static_cast<double>(k);
  const Matrix g1 = unit_circle_rows(angles, params.rho);
  Matrix g2(k, 2);
  for (int j = 0; j < k; ++j) g2.row(j) = g1.row(params.permutation.pi[j]);

  Rng rng(params.seed);
  const int ppl = params.points_per_label;
  std::vector<double> offsets, radii;
  if (params.shared_cluster_shape) {
    // one sampled cluster shape, rotated onto every label
    offsets.resize(ppl);
    radii.resize(ppl);
    for (int t = 0; t < ppl; ++t) {
      offsets[t] = rng.uniform(-jitter, jitter);
      radii[t] = params.radius_scale * std::exp(params.radius_sigma * rng.normal());
    }
  } else {
    offsets.resize(k * ppl);
    radii.resize(k * ppl);
    for (int t = 0; t < k * ppl; ++t) {
      offsets[t] = rng.uniform(-jitter, jitter);
      radii[t] = params.radius_scale * std::exp(params.radius_sigma * rng.normal());
    }
  }

  const int n = k * ppl;
  ConstructedPair out;
  out.a.embeddings.resize(n, 2);
  out.b.embeddings.resize(n, 2);
  out.labels.resize(n);
  out.is_witness.assign(n, 0);
  int row = 0;
  for (int j = 0; j < k; ++j) {
    const double target = angles[params.permutation.pi[j]];
    for (int t = 0; t < ppl; ++t, ++row) {
      const int idx = params.shared_cluster_shape ? t : row;
      const double th1 = angles[j] + offsets[idx];
      const double th2 = target + offsets[idx];
      out.a.embeddings(row, 0) = radii[idx] * std::cos(th1);
      out.a.embeddings(row, 1) = radii[idx] * std::sin(th1);
      out.b.embeddings(row, 0) = radii[idx] * std::cos(th2);
      out.b.embeddings(row, 1) = radii[idx] * std::sin(th2);
      out.labels[row] = j;
    }
  }
  out.a.unembeddings = g1;
  out.b.unembeddings = g2;
  out.a.input_ids = ModelTable::default_ids("x", n);
  out.a.label_ids = ModelTable::default_ids("y", k);
  out.b.input_ids = out.a.input_ids;
  out.b.label_ids = out.a.label_ids;
  out.data_weights = uniform_weights(n);
  out.a.validate();
  out.b.validate();
  return out;
}

CirclePairParams table1_circle_params(std::uint64_t seed) {
  CirclePairParams params;
  params.k = 8;
  params.rho = 3.0;
  params.points_per_label = 64;
  // Permutation with vanishing cluster cross-covariance: both character
  // sums over sigma(c)-c and sigma(c)+c cancel, so the CCA score of the
  // paired embeddings sits at the numerical noise floor.
  params.permutation.pi = {0, 3, 6, 1, 5, 2, 7, 4};
  params.permutation.kind = PermutationKind::kCircle;
  params.margin = kPi / 8.0 - 0.10;  // angular jitter +-0.10 rad
  params.radius_scale = 4.5;
  params.radius_sigma = 0.05;
  params.shared_cluster_shape = true;
  params.seed = seed;
  return params;
}

void RhoFamily::validate() const {
  if (rho_values.empty()) throw std::invalid_argument("RhoFamily: empty rho list");
  for (double r : rho_values)
    if (r <= 0.0) throw std::invalid_argument("RhoFamily: rho values must be positive");
  if (!std::is_sorted(rho_values.begin(), rho_values.end()))
    throw std::invalid_argument("RhoFamily: rho values must be ascending");
}

std::vector<RhoSweepRecord> rho_sweep(const RhoFamily& family, double lambda,
                                      const PivotSearchOptions& pivot_options) {
  family.validate();

  // Build the smallest-rho pair once; larger-rho members reuse the same
  // embedding tables bitwise and only rescale the unembedding norms.
  CirclePairParams base = family.base;
  base.rho = family.rho_values.front();
  const ConstructedPair smallest = build_circle_pair(base);
  const ModelPair first = smallest.pair();
  const PivotConfig pivots = select_pivots(first, pivot_options);

  const SampleMatrix emb_a{smallest.a.embeddings, smallest.data_weights};
  const SampleMatrix emb_b{smallest.b.embeddings, smallest.data_weights};
  const double mcca = m_cca(emb_a, emb_b);

  std::vector<RhoSweepRecord> out(family.rho_values.size());
  for (std::size_t r = 0; r < family.rho_values.size(); ++r) {
    const double rho = family.rho_values[r];
    ModelTable a = smallest.a;
    ModelTable b = smallest.b;
    const double scale = rho / family.rho_values.front();
    a.unembeddings *= scale;
    b.unembeddings *= scale;
    const ModelPair pair = ModelPair::make(std::move(a), std::move(b), smallest.data_weights);

    RhoSweepRecord rec;
    rec.rho = rho;
    rec.d_kl_pq = d_kl(pair.pa, pair.pb);
    rec.d_kl_qp = d_kl(pair.pb, pair.pa);
    rec.d_llv = d_llv(pair.pa, pair.pb, pivots, lambda).value;
    rec.m_cca = mcca;
    const auto z1 = projected_embeddings(pair.a, pair.pa, pivots);
    const auto z2 = projected_embeddings(pair.b, pair.pb, pivots);
    const auto w1 = projected_unembeddings(pair.a, pivots);
    const auto w2 = projected_unembeddings(pair.b, pivots);
    rec.max_d_svd = std::max(d_svd(z1, z2), d_svd(w1, w2));
    out[r] = rec;
  }
  return out;
}

ModelTable perturb_embeddings(const ModelTable& model, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("perturb_embeddings: sigma must be nonnegative");
  ModelTable out = model;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (int i = 0; i < out.embeddings.rows(); ++i)
    for (int c = 0; c < out.embeddings.cols(); ++c)
      out.embeddings(i, c) += sigma * rng.normal();
  return out;
}

}  // namespace repsim
