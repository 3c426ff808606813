#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "helpers.hpp"
#include "repsim/bound.hpp"
#include "repsim/constructions.hpp"
#include "repsim/representational.hpp"

using namespace repsim;
using repsim::testing::random_invertible;

namespace {

int top_label(const ModelTable& m, int row) {
  int best = 0;
  double best_logit = m.unembeddings.row(0).dot(m.embeddings.row(row));
  for (int j = 1; j < m.n_labels(); ++j) {
    const double logit = m.unembeddings.row(j).dot(m.embeddings.row(row));
    if (logit > best_logit) {
      best_logit = logit;
      best = j;
    }
  }
  return best;
}

int top_cosine(const ModelTable& m, int row) {
  int best = 0;
  double best_cos = -2.0;
  for (int j = 0; j < m.n_labels(); ++j) {
    const double c = m.unembeddings.row(j).dot(m.embeddings.row(row)) /
                     (m.unembeddings.row(j).norm() * m.embeddings.row(row).norm());
    if (c > best_cos) {
      best_cos = c;
      best = j;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("fixed-norm pair: unique top cosine equals top probability everywhere") {
  FixedNormPairParams params;
  const auto pair = build_fixed_norm_pair(params);
  for (const ModelTable* m : {&pair.a, &pair.b}) {
    for (int i = 0; i < m->n_inputs(); ++i) {
      CHECK(top_cosine(*m, i) == top_label(*m, i));
    }
  }
  // assigned labels agree with the top label in both models
  for (int i = 0; i < pair.a.n_inputs(); ++i) {
    CHECK(top_label(pair.a, i) == pair.labels[i]);
    CHECK(top_label(pair.b, i) == pair.labels[i]);
  }
}

TEST_CASE("fixed-norm pair: embeddings agree where the top label did not move") {
  FixedNormPairParams params;
  const auto pair = build_fixed_norm_pair(params);
  const int M = params.M;
  for (int i = 0; i < pair.a.n_inputs(); ++i) {
    if (pair.labels[i] < M) {
      CHECK((pair.a.embeddings.row(i) - pair.b.embeddings.row(i)).cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK((pair.a.embeddings.row(i) - pair.b.embeddings.row(i)).cwiseAbs().maxCoeff() > 0.0);
    }
  }
}

TEST_CASE("fixed-norm pair: unembedding norms equal rho to the last bit") {
  for (double rho : {3.0, 7.5, 18.0}) {
    FixedNormPairParams params;
    params.rho = rho;
    const auto pair = build_fixed_norm_pair(params);
    for (const ModelTable* m : {&pair.a, &pair.b})
      for (int j = 0; j < m->n_labels(); ++j)
        CHECK(std::abs(m->unembeddings.row(j).norm() - rho) < 1e-12 * rho);
  }
}

TEST_CASE("fixed-norm pair: d_kl strictly decreasing over the default rho grid") {
  double prev = std::numeric_limits<double>::infinity();
  for (double rho : {3.0, 6.0, 9.0, 12.0, 15.0, 18.0}) {
    FixedNormPairParams params;
    params.rho = rho;
    const auto pair = build_fixed_norm_pair(params);
    const auto mp = pair.pair();
    const double kl = d_kl(mp.pa, mp.pb);
    CHECK(kl < prev);
    prev = kl;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("fixed-norm pair supports both k = M+1 and k = M+2, rejects others") {
  FixedNormPairParams p3;
  p3.k = 3;
  const auto small = build_fixed_norm_pair(p3);
  CHECK(small.a.n_labels() == 3);
  FixedNormPairParams p5;
  p5.k = 5;
  CHECK_THROWS_AS(build_fixed_norm_pair(p5), std::invalid_argument);
}

TEST_CASE("fixed-norm pair: embeddings are not an affine image, unlike the control") {
  FixedNormPairParams params;
  const auto pair = build_fixed_norm_pair(params);
  const SampleMatrix z{pair.a.embeddings, uniform_weights(pair.a.n_inputs())};
  const SampleMatrix w{pair.b.embeddings, uniform_weights(pair.a.n_inputs())};
  const double residual = linear_fit_residuals(z, w).mean();

  Rng rng(77);
  const auto control_model = apply_equivalence(pair.a, random_invertible(rng, 2));
  const SampleMatrix cw{control_model.embeddings, uniform_weights(pair.a.n_inputs())};
  const double control = linear_fit_residuals(z, cw).mean();
  CHECK(residual > 10.0 * control);
  CHECK(residual > 1e-3);
}

TEST_CASE("corollary dataset: nll decreasing, below 1e-3 at the top of the sweep") {
  double prev = std::numeric_limits<double>::infinity();
  for (double rho : {3.0, 6.0, 9.0, 12.0, 15.0, 18.0}) {
    FixedNormPairParams params;
    params.rho = rho;
    const auto pair = build_fixed_norm_pair(params);
    const double va = nll(pair.a, pair.labels, pair.data_weights);
    const double vb = nll(pair.b, pair.labels, pair.data_weights);
    CHECK(va < prev);
    prev = va;
    CHECK(std::abs(va - vb) < 1e-6);  // mirrored geometry
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("circle pair with the identity permutation is the same model twice") {
  CirclePairParams params;
  params.permutation = PermutationSpec::identity(params.k);
  const auto pair = build_circle_pair(params);
  CHECK((pair.a.embeddings - pair.b.embeddings).cwiseAbs().maxCoeff() == 0.0);
  CHECK((pair.a.unembeddings - pair.b.unembeddings).cwiseAbs().maxCoeff() == 0.0);
  const auto mp = pair.pair();
  CHECK(d_kl(mp.pa, mp.pb) == 0.0);
}

TEST_CASE("circle pair: every sampled embedding is angularly closest to its label") {
  CirclePairParams params;
  params.seed = 123;
  const auto pair = build_circle_pair(params);
  for (int i = 0; i < pair.a.n_inputs(); ++i) {
    CHECK(top_cosine(pair.a, i) == pair.labels[i]);
    CHECK(top_cosine(pair.b, i) == pair.labels[i]);
  }
}

TEST_CASE("circle pair: unembeddings sit on the rho circle at uniform angles") {
  CirclePairParams params;
  params.rho = 5.0;
  const auto pair = build_circle_pair(params);
  for (int j = 0; j < params.k; ++j) {
    CHECK(pair.a.unembeddings.row(j).norm() == doctest::Approx(5.0).epsilon(1e-12));
    const double angle = std::atan2(pair.a.unembeddings(j, 1), pair.a.unembeddings(j, 0));
    const double expect = std::remainder(2.0 * M_PI * j / params.k, 2.0 * M_PI);
    CHECK(std::remainder(angle - expect, 2.0 * M_PI) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("table1 regeneration at rho = 18: tiny KL, dissimilar representations") {
  CirclePairParams params = table1_circle_params(7);
  params.rho = 18.0;
  const auto pair = build_circle_pair(params);
  const auto mp = pair.pair();
  CHECK(d_kl(mp.pa, mp.pb) <= 1e-3);
  const SampleMatrix z{pair.a.embeddings, pair.data_weights};
  const SampleMatrix w{pair.b.embeddings, pair.data_weights};
  CHECK(m_cca(z, w) <= 0.01);
  const auto piv = select_pivots(mp);
  const auto z1 = projected_embeddings(mp.a, mp.pa, piv);
  const auto z2 = projected_embeddings(mp.b, mp.pb, piv);
  CHECK(d_svd(z1, z2) >= 0.98);
}

TEST_CASE("rho family keeps the embedding tables bitwise identical") {
  RhoFamily family;
  family.base = table1_circle_params(3);
  for (double rho : family.rho_values) {
    CirclePairParams params = family.base;
    params.rho = rho;
    const auto pair = build_circle_pair(params);
    CirclePairParams first = family.base;
    first.rho = family.rho_values.front();
    const auto base_pair = build_circle_pair(first);
    REQUIRE(pair.a.embeddings.size() == base_pair.a.embeddings.size());
    CHECK(std::memcmp(pair.a.embeddings.data(), base_pair.a.embeddings.data(),
                      sizeof(double) * pair.a.embeddings.size()) == 0);
    CHECK(std::memcmp(pair.b.embeddings.data(), base_pair.b.embeddings.data(),
                      sizeof(double) * pair.b.embeddings.size()) == 0);
    // unembedding norms track rho exactly
    for (int j = 0; j < pair.a.n_labels(); ++j)
      CHECK(std::abs(pair.a.unembeddings.row(j).norm() - rho) < 1e-12 * rho);
  }
}

TEST_CASE("rho sweep: circle-family d_kl strictly decreasing, d_llv flat") {
  RhoFamily family;
  family.base = table1_circle_params(7);
  const auto records = rho_sweep(family);
  REQUIRE(records.size() == 6);
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    CHECK(records[i + 1].d_kl_pq < records[i].d_kl_pq);
    CHECK(records[i + 1].d_kl_qp < records[i].d_kl_qp);
  }
  CHECK(records.back().d_kl_pq / records.front().d_kl_pq < 1e-3);
  double mean = 0.0;
  for (const auto& r : records) mean += r.d_llv;
  mean /= records.size();
  double sd = 0.0;
  for (const auto& r : records) sd += (r.d_llv - mean) * (r.d_llv - mean);
  sd = std::sqrt(sd / records.size());
  CHECK(sd < 0.02 * mean);
}

TEST_CASE("circle model at k = 6: adjacent non-antipodal labels give diversity") {
  CirclePairParams params;
  params.k = 6;
  const auto pair = build_circle_pair(params);
  // projection labels 1 and 2 are adjacent to each other and not antipodal
  // to the pivot label 0
  PivotConfig piv = repsim::testing::fixed_pivots(pair.a.n_inputs(), 6, 2);
  const auto check = check_diversity(pair.a, piv);
  CHECK(check.ok);
  CHECK(check.l_cond < 1e3);
}

TEST_CASE("selected pivots reproduce the distance within 10% across seeds") {
  CirclePairParams params = table1_circle_params(7);
  const auto pair_data = build_circle_pair(params);
  const auto pair = pair_data.pair();
  PivotSearchOptions a, b;
  a.seed = 1;
  b.seed = 2;
  const double va = d_llv(pair.pa, pair.pb, select_pivots(pair, a)).value;
  const double vb = d_llv(pair.pa, pair.pb, select_pivots(pair, b)).value;
  CHECK(std::abs(va - vb) <= 0.1 * std::max(va, vb));
}

TEST_CASE("zero-noise perturbation returns the identical model") {
  CirclePairParams params;
  const auto base = build_circle_pair(params);
  const auto same = perturb_embeddings(base.a, 0.0, 99);
  CHECK((same.embeddings - base.a.embeddings).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturbation distance grows with sigma, allowing one inversion") {
  CirclePairParams params;
  params.k = 8;
  params.rho = 4.0;
  params.permutation = PermutationSpec::identity(8);
  const auto base = build_circle_pair(params);
  std::vector<double> values;
  PivotSearchOptions options;
  options.seed = 17;
  for (int step = 0; step < 10; ++step) {
    const double sigma = 0.012 * step;
    const auto perturbed = perturb_embeddings(base.a, sigma, 55 + step);
    const auto mp = ModelPair::make(base.a, perturbed, base.data_weights);
    const auto piv = select_pivots(mp, options);
    values.push_back(d_llv(mp.pa, mp.pb, piv).value);
  }
  int inversions = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) inversions += (values[i + 1] < values[i]);
  CHECK(inversions <= 1);
  CHECK(values.front() == 0.0);
  CHECK(values.back() > values.front());
}

TEST_CASE("permutations must be bijections") {
  PermutationSpec bad;
  bad.pi = {0, 0, 2};
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
  CHECK_THROWS_AS(PermutationSpec::circle_swap(4, 1, 1), std::invalid_argument);
}
