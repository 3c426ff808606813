#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "repsim/model.hpp"

using namespace repsim;
using repsim::testing::fixed_pivots;
using repsim::testing::random_invertible;
using repsim::testing::random_model;

TEST_CASE("all-zero embeddings give the uniform distribution") {
  ModelTable m;
  m.embeddings = Matrix::Zero(5, 2);
  m.unembeddings = Matrix::Random(4, 2);
  const auto dist = cond_log_probs(m);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) CHECK(dist.logp(i, j) == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("opposed unit logits split mass evenly") {
  // f(x) = 1 in one dimension, both unembeddings at 0: logits are equal
  ModelTable m;
  m.embeddings = Matrix::Constant(3, 1, 1.0);
  m.unembeddings = Matrix::Zero(2, 1);
  const auto dist = cond_log_probs(m);
  CHECK(std::exp(dist.logp(0, 0)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::exp(dist.logp(0, 1)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax of (3, 0, -3) matches the direct evaluation") {
  ModelTable m;
  m.embeddings.resize(3, 2);
  m.embeddings << 1, 0, 0, 1, -1, 0;
  m.unembeddings.resize(3, 2);
  m.unembeddings << 3, 0, 0, 3, -3, 0;
  const auto dist = cond_log_probs(m);
  // independent oracle: direct softmax of the logits (3, 0, -3)
  const double z = std::exp(3.0) + 1.0 + std::exp(-3.0);
  const double expected[3] = {std::exp(3.0) / z, 1.0 / z, std::exp(-3.0) / z};
  for (int j = 0; j < 3; ++j)
    CHECK(std::exp(dist.logp(0, j)) == doctest::Approx(expected[j]).epsilon(1e-12));
  CHECK(expected[0] == doctest::Approx(0.9503).epsilon(2e-3));
  CHECK(expected[1] == doctest::Approx(0.0474).epsilon(2e-3));
  CHECK(expected[2] == doctest::Approx(0.00236).epsilon(2e-3));
}

TEST_CASE("rows are stochastic within 1e-10") {
  Rng rng(11);
  const auto m = random_model(rng, 20, 7, 3, 2.5);
  const auto dist = cond_log_probs(m);
  dist.validate();
}

TEST_CASE("non-finite logits are rejected with the offending cell") {
  ModelTable m;
  m.embeddings = Matrix::Constant(3, 2, 1e300);
  m.unembeddings = Matrix::Constant(3, 2, 1e300);
  CHECK_THROWS_WITH_AS(cond_log_probs(m), doctest::Contains("non-finite logit"),
                       std::invalid_argument);
}

TEST_CASE("displaced tables zero out the pivot rows") {
  Rng rng(3);
  const auto m = random_model(rng, 8, 5, 2);
  const auto piv = fixed_pivots(8, 5, 2);
  const auto tables = displaced(m, piv);
  CHECK(tables.f0.row(piv.x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tables.g0.row(piv.y0).cwiseAbs().maxCoeff() == 0.0);
  // componentwise subtraction
  CHECK(tables.f0(1, 0) == m.embeddings(1, 0) - m.embeddings(piv.x0, 0));
}

TEST_CASE("displacement is invariant to translating every embedding") {
  Rng rng(4);
  auto m = random_model(rng, 8, 5, 2);
  const auto piv = fixed_pivots(8, 5, 2);
  const auto before = displaced(m, piv);
  m.embeddings.rowwise() += Eigen::RowVector2d(3.5, -1.25);
  const auto after = displaced(m, piv);
  CHECK((before.f0 - after.f0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("diversity accepts orthonormal displaced unembeddings") {
  ModelTable m;
  m.embeddings.resize(4, 2);
  m.embeddings << 0, 0, 1, 0, 0, 1, 1, 1;
  m.unembeddings.resize(4, 2);
  m.unembeddings << 0, 0, 1, 0, 0, 1, -1, -1;
  PivotConfig piv = fixed_pivots(4, 4, 2);
  const auto check = check_diversity(m, piv);
  CHECK(check.ok);
  CHECK(check.l_cond == doctest::Approx(1.0));
}

TEST_CASE("duplicated unembedding rows fail diversity without throwing") {
  ModelTable m;
  m.embeddings.resize(4, 2);
  m.embeddings << 0, 0, 1, 0, 0, 1, 1, 1;
  m.unembeddings.resize(4, 2);
  m.unembeddings << 0, 0, 1, 0, 1, 0, 2, 2;  // labels 1 and 2 coincide
  PivotConfig piv = fixed_pivots(4, 4, 2);
  const auto check = check_diversity(m, piv);
  CHECK_FALSE(check.ok);
}

TEST_CASE("projection columns follow the pivot ordering and scale linearly") {
  Rng rng(5);
  auto m = random_model(rng, 10, 6, 2);
  const auto piv = fixed_pivots(10, 6, 2);
  const auto proj = build_projections(m, piv);
  const auto labels = piv.projection_labels(2);
  for (int c = 0; c < 2; ++c) {
    const Vector expected =
        (m.unembeddings.row(labels[c]) - m.unembeddings.row(piv.y0)).transpose();
    CHECK((proj.L.col(c) - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  m.unembeddings *= 2.0;
  const auto doubled = build_projections(m, piv);
  CHECK((doubled.L - 2.0 * proj.L).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singular projections raise an error carrying the condition number") {
  ModelTable m;
  m.embeddings.resize(4, 2);
  m.embeddings << 0, 0, 1, 0, 0, 1, 1, 1;
  m.unembeddings.resize(4, 2);
  m.unembeddings << 0, 0, 1, 0, 2, 0, 3, 0;  // rank one after displacement
  const auto piv = fixed_pivots(4, 4, 2);
  CHECK_THROWS_WITH_AS(build_projections(m, piv), doctest::Contains("condition number"),
                       std::runtime_error);
}

TEST_CASE("identity equivalence leaves the model unchanged") {
  Rng rng(6);
  const auto m = random_model(rng, 6, 4, 2);
  const auto same = apply_equivalence(m, Matrix::Identity(2, 2));
  CHECK((same.embeddings - m.embeddings).cwiseAbs().maxCoeff() == 0.0);
  CHECK((same.unembeddings - m.unembeddings).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scaling equivalence halves embeddings and doubles unembeddings") {
  Rng rng(7);
  const auto m = random_model(rng, 6, 4, 2);
  const auto scaled = apply_equivalence(m, 2.0 * Matrix::Identity(2, 2));
  CHECK((scaled.embeddings - 0.5 * m.embeddings).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((scaled.unembeddings - 2.0 * m.unembeddings).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("equivalence preserves the conditional distribution over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 100);
    const auto m = random_model(rng, 9, 5, 2);
    const auto a = random_invertible(rng, 2);
    const auto other = apply_equivalence(m, a);
    const auto p = cond_log_probs(m);
    const auto q = cond_log_probs(other);
    CHECK((p.logp - q.logp).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(d_kl(p, q) < 1e-10);
  }
}

TEST_CASE("alignment recovery: L^{-T} L'^T maps the equivalent model back") {
  Rng rng(42);
  const auto m = random_model(rng, 10, 6, 2);
  const auto a = random_invertible(rng, 2);
  const auto other = apply_equivalence(m, a);
  const auto piv = fixed_pivots(10, 6, 2);
  REQUIRE(check_diversity(m, piv).ok);
  const auto proj = build_projections(m, piv);
  const auto proj_other = build_projections(other, piv);
  const Matrix recovered = proj.L.transpose().inverse() * proj_other.L.transpose();
  const Matrix mapped = other.embeddings * recovered.transpose();
  CHECK((mapped - m.embeddings).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("singular equivalence matrices are rejected") {
  Rng rng(9);
  const auto m = random_model(rng, 6, 4, 2);
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(apply_equivalence(m, singular), std::invalid_argument);
}

TEST_CASE("nll is zero for a confident model and log k for a uniform one") {
  ModelTable confident;
  confident.embeddings.resize(3, 2);
  confident.embeddings << 60, 0, 0, 60, -60, -60;
  confident.unembeddings.resize(3, 2);
  confident.unembeddings << 1, 0, 0, 1, -1, -1;
  const std::vector<int> labels{0, 1, 2};
  const double v = nll(confident, labels, uniform_weights(3));
  CHECK(v >= 0.0);
  CHECK(v < 1e-10);

  ModelTable uniform;
  uniform.embeddings = Matrix::Zero(3, 2);
  uniform.unembeddings = Matrix::Random(4, 2);
  const double u = nll(uniform, {0, 1, 2}, uniform_weights(3));
  CHECK(u == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("model table validation rejects undersized grids") {
  ModelTable m;
  m.embeddings = Matrix::Zero(2, 2);  // n = M < M+1
  m.unembeddings = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
