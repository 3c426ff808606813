#include "repsim/bound.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "repsim/rng.hpp"

namespace repsim {

namespace {

struct PsiDiag {
  Vector s_inv;  // 1/psi_x per projection label
  Vector d_inv;  // 1/psi_y per projected input
};

PsiDiag psi_diagonals(const CondLogProb& p, const PivotConfig& pivots,
                      const std::vector<int>& proj_labels, double psi_floor) {
  const auto psi = psi_terms(p, pivots, psi_floor);
  if (!psi.ok()) {
    std::ostringstream msg;
    msg << "vanishing psi terms:";
    for (int y : psi.violations_x) msg << " psi_x(" << y << ")";
    for (int x : psi.violations_y) msg << " psi_y(" << x << ")";
    throw std::runtime_error(msg.str());
  }
  PsiDiag out;
  out.s_inv.resize(static_cast<int>(proj_labels.size()));
  for (std::size_t i = 0; i < proj_labels.size(); ++i) {
    const auto it = std::find(psi.psi_x_labels.begin(), psi.psi_x_labels.end(), proj_labels[i]);
    out.s_inv[static_cast<int>(i)] = 1.0 / psi.psi_x[static_cast<int>(it - psi.psi_x_labels.begin())];
  }
  out.d_inv = psi.psi_y.cwiseInverse();
  return out;
}

double weighted_corr(const Vector& a, const Vector& b, const Vector& w) {
  const double ma = w.dot(a), mb = w.dot(b);
  double vab = 0.0, va = 0.0, vb = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    vab += w[i] * da * db;
    va += w[i] * da * da;
    vb += w[i] * db * db;
  }
  return vab / std::sqrt(va * vb);
}

double weighted_var(const Vector& v, const Vector& w) {
  const double m = w.dot(v);
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += w[i] * (v[i] - m) * (v[i] - m);
  return acc;
}

}  // namespace

Vector epsilon_y_vector(const ModelPair& pair, const PivotConfig& pivots, int x_index,
                        double psi_floor) {
  const int M = pair.dim();
  const auto proj = pivots.projection_labels(M);
  const auto da = psi_diagonals(pair.pa, pivots, proj, psi_floor);
  const auto db = psi_diagonals(pair.pb, pivots, proj, psi_floor);
  Vector out(M);
  for (int i = 0; i < M; ++i) {
    const int y = proj[i];
    const double ra = pair.pa.logp(x_index, y) - pair.pa.logp(x_index, pivots.y0);
    const double rb = pair.pb.logp(x_index, y) - pair.pb.logp(x_index, pivots.y0);
    out[i] = ra * da.s_inv[i] - rb * db.s_inv[i];
  }
  return out;
}

Vector epsilon_x_vector(const ModelPair& pair, const PivotConfig& pivots, int y_index,
                        double psi_floor) {
  const int M = pair.dim();
  const auto proj = pivots.projection_labels(M);
  const auto da = psi_diagonals(pair.pa, pivots, proj, psi_floor);
  const auto db = psi_diagonals(pair.pb, pivots, proj, psi_floor);
  Vector out(M);
  for (int j = 0; j < M; ++j) {
    const int x = pivots.x_llv[j];
    const double ra = pair.pa.logp(x, y_index) - pair.pa.logp(pivots.x0, y_index);
    const double rb = pair.pb.logp(x, y_index) - pair.pb.logp(pivots.x0, y_index);
    out[j] = ra * da.d_inv[j] - rb * db.d_inv[j];
  }
  return out;
}

ReconstructionCheck check_reconstruction(const ModelPair& pair, const PivotConfig& pivots) {
  const int M = pair.dim();
  const auto proj_a = build_projections(pair.a, pivots);
  const auto proj_b = build_projections(pair.b, pivots);
  const auto proj = pivots.projection_labels(M);
  const auto da = psi_diagonals(pair.pa, pivots, proj, 1e-12);
  const auto db = psi_diagonals(pair.pb, pivots, proj, 1e-12);

  ReconstructionCheck out;

  // f(x) = A~ f'(x) + L^{-T} S^{-1} eps_y(x)
  const Matrix Lti = proj_a.L.transpose().inverse();
  const Matrix Atil = Lti * da.s_inv.cwiseInverse().asDiagonal() *
                      db.s_inv.asDiagonal() * proj_b.L.transpose();
  for (int x = 0; x < pair.n_inputs(); ++x) {
    const Vector eps = epsilon_y_vector(pair, pivots, x);
    const Vector recon = Atil * pair.b.embeddings.row(x).transpose() +
                         Lti * da.s_inv.cwiseInverse().asDiagonal() * eps;
    out.max_f_error = std::max(
        out.max_f_error,
        (pair.a.embeddings.row(x).transpose() - recon).cwiseAbs().maxCoeff());
  }

  // g0(y) = B g0'(y) + N^{-T} D^{-1} (eps_x(y) - eps_x(y0)); the pivot-label
  // shift removes the partition-function offset.
  const Matrix Nti = proj_a.N.transpose().inverse();
  const Matrix B = Nti * da.d_inv.cwiseInverse().asDiagonal() *
                   db.d_inv.asDiagonal() * proj_b.N.transpose();
  const auto disp_a = displaced(pair.a, pivots);
  const auto disp_b = displaced(pair.b, pivots);
  const Vector eps_y0 = epsilon_x_vector(pair, pivots, pivots.y0);
  for (int y = 0; y < pair.n_labels(); ++y) {
    const Vector eps = epsilon_x_vector(pair, pivots, y) - eps_y0;
    const Vector recon = B * disp_b.g0.row(y).transpose() +
                         Nti * da.d_inv.cwiseInverse().asDiagonal() * eps;
    out.max_g_error = std::max(
        out.max_g_error, (disp_a.g0.row(y).transpose() - recon).cwiseAbs().maxCoeff());
  }
  return out;
}

VarCorrReport var_corr_identity(const ModelPair& pair, const PivotConfig& pivots) {
  const int M = pair.dim();
  const auto proj_a = build_projections(pair.a, pivots);
  const auto proj_b = build_projections(pair.b, pivots);
  const auto& w = pair.pa.input_weights;

  VarCorrReport out;

  // Embedding side: components are the projection labels, variance over inputs.
  Matrix eps_rows(pair.n_inputs(), M);
  for (int x = 0; x < pair.n_inputs(); ++x)
    eps_rows.row(x) = epsilon_y_vector(pair, pivots, x).transpose();
  for (int i = 0; i < M; ++i) {
    VarCorrRow row;
    row.component = proj_a.l_labels[i];
    row.var_eps = weighted_var(eps_rows.col(i), w);
    const Vector a = pair.a.embeddings * proj_a.L.col(i);
    const Vector b = pair.b.embeddings * proj_b.L.col(i);
    row.two_one_minus_corr = 2.0 * (1.0 - weighted_corr(a, b, w));
    row.gap = std::abs(row.var_eps - row.two_one_minus_corr);
    out.max_gap = std::max(out.max_gap, row.gap);
    out.embedding.push_back(row);
  }

  // Unembedding side: components are the projected inputs, variance uniform
  // over the label set.
  const int kll = static_cast<int>(pivots.y_llv.size());
  const Vector uw = uniform_weights(kll);
  Matrix eps_cols(kll, M);
  for (int r = 0; r < kll; ++r)
    eps_cols.row(r) = epsilon_x_vector(pair, pivots, pivots.y_llv[r]).transpose();
  Matrix ga(kll, M), gb(kll, M);
  for (int r = 0; r < kll; ++r) {
    ga.row(r) = (pair.a.unembeddings.row(pivots.y_llv[r]) * proj_a.N);
    gb.row(r) = (pair.b.unembeddings.row(pivots.y_llv[r]) * proj_b.N);
  }
  for (int j = 0; j < M; ++j) {
    VarCorrRow row;
    row.component = pivots.x_llv[j];
    row.var_eps = weighted_var(eps_cols.col(j), uw);
    row.two_one_minus_corr = 2.0 * (1.0 - weighted_corr(ga.col(j), gb.col(j), uw));
    row.gap = std::abs(row.var_eps - row.two_one_minus_corr);
    out.max_gap = std::max(out.max_gap, row.gap);
    out.unembedding.push_back(row);
  }
  return out;
}

SampleMatrix projected_embeddings(const ModelTable& model, const CondLogProb& dist,
                                  const PivotConfig& pivots) {
  const auto proj = build_projections(model, pivots);
  SampleMatrix out;
  out.rows = model.embeddings * proj.L;
  out.weights = dist.input_weights;
  return out;
}

SampleMatrix projected_unembeddings(const ModelTable& model, const PivotConfig& pivots) {
  const auto proj = build_projections(model, pivots);
  const int kll = static_cast<int>(pivots.y_llv.size());
  SampleMatrix out;
  out.rows.resize(kll, model.dim());
  for (int r = 0; r < kll; ++r)
    out.rows.row(r) = model.unembeddings.row(pivots.y_llv[r]) * proj.N;
  out.weights = uniform_weights(kll);
  return out;
}

BoundCertificate verify_bound(const ModelPair& pair, const PivotConfig& pivots,
                              const BoundOptions& options) {
  BoundCertificate cert;
  cert.pivots = pivots;
  const int M = pair.dim();

  bool ok = true;
  auto note = [&](const std::string& s) {
    cert.diagnostics.push_back(s);
    ok = false;
  };

  // (1) invertible projections for both models
  const auto div_a = check_diversity(pair.a, pivots, options.cond_cap);
  const auto div_b = check_diversity(pair.b, pivots, options.cond_cap);
  if (!div_a.ok) note("first model: L or N not invertible at the condition cap");
  if (!div_b.ok) note("second model: L or N not invertible at the condition cap");

  // probe additional label subsets from the admissible set
  {
    std::vector<int> pool;
    for (int y : pivots.y_llv)
      if (y != pivots.y0) pool.push_back(y);
    Rng rng(options.resample_seed);
    for (int rep = 0; rep < options.diversity_resamples &&
                      static_cast<int>(pool.size()) > M;
         ++rep) {
      const auto pick = rng.sample_indices(static_cast<int>(pool.size()), M);
      for (const ModelTable* model : {&pair.a, &pair.b}) {
        Matrix L(M, M);
        for (int c = 0; c < M; ++c)
          L.col(c) = (model->unembeddings.row(pool[pick[c]]) -
                      model->unembeddings.row(pivots.y0))
                         .transpose();
        if (condition_number(L) >= options.cond_cap) {
          std::ostringstream msg;
          msg << "resampled label subset " << rep << " yields a singular L";
          note(msg.str());
        }
      }
    }
  }

  // (2) nonvanishing psi terms for both models
  for (const auto* d : {&pair.pa, &pair.pb}) {
    const auto psi = psi_terms(*d, pivots);
    if (!psi.ok())
      note(d == &pair.pa ? "first model violates the log-ratio variance assumption"
                         : "second model violates the log-ratio variance assumption");
  }

  if (!ok) {
    cert.preconditions_ok = false;
    return cert;
  }

  try {
    // (3) nonsingular covariances of the projected samples; a singular
    // cross-covariance makes the guarantee inapplicable but the measured
    // values are still recorded.
    const auto z1 = projected_embeddings(pair.a, pair.pa, pivots);
    const auto z2 = projected_embeddings(pair.b, pair.pb, pivots);
    const auto w1 = projected_unembeddings(pair.a, pivots);
    const auto w2 = projected_unembeddings(pair.b, pivots);
    const auto singular = [&](const Matrix& m) {
      return condition_number(m) >= options.cond_cap;
    };
    if (singular(cross_covariance(z1, z1))) note("projected embedding covariance singular");
    if (singular(cross_covariance(w1, w1))) note("projected unembedding covariance singular");
    if (singular(cross_covariance(z1, z2))) note("projected embedding cross-covariance singular");
    if (singular(cross_covariance(w1, w2))) note("projected unembedding cross-covariance singular");
    cert.preconditions_ok = ok;

    cert.llv = d_llv(pair.pa, pair.pb, pivots, options.lambda);
    cert.epsilon = cert.llv.value;
    cert.lhs_emb = d_svd(z1, z2);
    cert.lhs_unemb = d_svd(w1, w2);
    cert.rhs = 2.0 * M * cert.epsilon;
    cert.vacuous = cert.rhs >= 1.0;
    cert.holds = std::max(cert.lhs_emb, cert.lhs_unemb) <= cert.rhs + options.slack;
  } catch (const std::exception& e) {
    cert.preconditions_ok = false;
    cert.diagnostics.push_back(e.what());
  }
  return cert;
}

}  // namespace repsim
