#include "repsim/distributional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "repsim/rng.hpp"

namespace repsim {

namespace {

void require_same_grid(const CondLogProb& p, const CondLogProb& q) {
  if (p.n_inputs() != q.n_inputs() || p.n_labels() != q.n_labels())
    throw std::invalid_argument("distributions live on different grids");
  if ((p.input_weights - q.input_weights).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("distributions carry different input weights");
}

// Weighted population variance; weights sum to 1. Plain accumulation so
// the serial reference kernels reproduce it bitwise.
double weighted_var(const Vector& v, const Vector& w) {
  double mean = 0.0;
  for (int i = 0; i < v.size(); ++i) mean += w[i] * v[i];
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double d = v[i] - mean;
    acc += w[i] * d * d;
  }
  return acc;
}

// Unweighted population variance over the given entries.
double plain_var(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

// std over inputs of log p(y|x) - log p(y0|x), weighted by input weights.
double psi_x_of(const CondLogProb& p, int y, int y0) {
  const Vector diff = p.logp.col(y) - p.logp.col(y0);
  return std::sqrt(weighted_var(diff, p.input_weights));
}

// std over the label set (uniform) of log p(y|x) - log p(y|x0).
double psi_y_of(const CondLogProb& p, int x, int x0, const std::vector<int>& y_llv) {
  std::vector<double> diff(y_llv.size());
  for (std::size_t i = 0; i < y_llv.size(); ++i)
    diff[i] = p.logp(x, y_llv[i]) - p.logp(x0, y_llv[i]);
  return std::sqrt(plain_var(diff));
}

struct T1Result {
  double value = 0.0;
  bool feasible = false;
  std::vector<int> vanished_p, vanished_q;
};

// t1 over y in y_llv \ {y0}: both variance terms share the per-label psi
// normalizers of the respective model.
T1Result t1_term(const CondLogProb& p, const CondLogProb& q, int y0,
                 const std::vector<int>& y_llv, double psi_floor) {
  T1Result out;
  double best = 0.0;
  for (int y : y_llv) {
    if (y == y0) continue;
    const double pp = psi_x_of(p, y, y0);
    const double pq = psi_x_of(q, y, y0);
    if (pp < psi_floor) out.vanished_p.push_back(y);
    if (pq < psi_floor) out.vanished_q.push_back(y);
    if (pp < psi_floor || pq < psi_floor) continue;
    const Vector a = p.logp.col(y) / pp - q.logp.col(y) / pq;
    const Vector b = p.logp.col(y0) / pp - q.logp.col(y0) / pq;
    best = std::max(best, std::sqrt(weighted_var(a, p.input_weights)));
    best = std::max(best, std::sqrt(weighted_var(b, p.input_weights)));
  }
  out.feasible = out.vanished_p.empty() && out.vanished_q.empty();
  out.value = best;
  return out;
}

struct T2Result {
  double value = 0.0;
  bool feasible = false;
  std::vector<int> vanished_p, vanished_q;
};

T2Result t2_term(const CondLogProb& p, const CondLogProb& q, int x0,
                 const std::vector<int>& x_llv, const std::vector<int>& y_llv,
                 double psi_floor) {
  T2Result out;
  double best = 0.0;
  const auto var_over_labels = [&](const CondLogProb& m1, int xa, double s1,
                                   const CondLogProb& m2, int xb, double s2) {
    std::vector<double> diff(y_llv.size());
    for (std::size_t i = 0; i < y_llv.size(); ++i)
      diff[i] = m1.logp(xa, y_llv[i]) / s1 - m2.logp(xb, y_llv[i]) / s2;
    return plain_var(diff);
  };
  for (int x : x_llv) {
    const double pp = psi_y_of(p, x, x0, y_llv);
    const double pq = psi_y_of(q, x, x0, y_llv);
    if (pp < psi_floor) out.vanished_p.push_back(x);
    if (pq < psi_floor) out.vanished_q.push_back(x);
    if (pp < psi_floor || pq < psi_floor) continue;
    best = std::max(best, std::sqrt(var_over_labels(p, x, pp, q, x, pq)));
    best = std::max(best, std::sqrt(var_over_labels(p, x0, pp, q, x0, pq)));
  }
  out.feasible = out.vanished_p.empty() && out.vanished_q.empty();
  out.value = best;
  return out;
}

double t3_term(const CondLogProb& p, const CondLogProb& q, int y0,
               const std::vector<int>& y_llv) {
  double best = 0.0;
  for (int y : y_llv) {
    if (y == y0) continue;
    best = std::max(best, std::abs(psi_x_of(p, y, y0) - psi_x_of(q, y, y0)));
  }
  return best;
}

double t4_term(const CondLogProb& p, const CondLogProb& q, int x0,
               const std::vector<int>& x_llv, const std::vector<int>& y_llv) {
  double best = 0.0;
  for (int x : x_llv)
    best = std::max(best, std::abs(psi_y_of(p, x, x0, y_llv) - psi_y_of(q, x, x0, y_llv)));
  return best;
}

std::vector<int> labels_without(int k, int excluded) {
  std::vector<int> out;
  out.reserve(k - 1);
  for (int y = 0; y < k; ++y)
    if (y != excluded) out.push_back(y);
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  return s.str();
}

}  // namespace

ModelPair ModelPair::make(ModelTable a, ModelTable b, Vector weights) {
  a.validate();
  b.validate();
  if (a.n_inputs() != b.n_inputs() || a.n_labels() != b.n_labels() || a.dim() != b.dim())
    throw std::invalid_argument("ModelPair: models live on different grids");
  ModelPair out;
  out.pa = cond_log_probs(a, weights);
  out.pb = cond_log_probs(b, weights);
  out.a = std::move(a);
  out.b = std::move(b);
  return out;
}

ModelPair ModelPair::make(ModelTable a, ModelTable b) {
  const int n = a.n_inputs();
  return make(std::move(a), std::move(b), uniform_weights(n));
}

double d_kl(const CondLogProb& p, const CondLogProb& q) {
  require_same_grid(p, q);
  const int n = p.n_inputs(), k = p.n_labels();
  Vector per_row(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j)
      acc += std::exp(p.logp(i, j)) * (p.logp(i, j) - q.logp(i, j));
    per_row[i] = acc;
  }
  double total = 0.0;  // serial reduction keeps the result schedule-independent
  for (int i = 0; i < n; ++i) total += p.input_weights[i] * per_row[i];
  return total;
}

PsiTerms psi_terms(const CondLogProb& p, const PivotConfig& pivots, double psi_floor) {
  PsiTerms out;
  const auto& yll = pivots.y_llv;
  out.psi_x_labels.reserve(yll.size() - 1);
  for (int y : yll)
    if (y != pivots.y0) out.psi_x_labels.push_back(y);
  out.psi_x.resize(static_cast<int>(out.psi_x_labels.size()));
  for (std::size_t i = 0; i < out.psi_x_labels.size(); ++i) {
    out.psi_x[static_cast<int>(i)] = psi_x_of(p, out.psi_x_labels[i], pivots.y0);
    if (out.psi_x[static_cast<int>(i)] < psi_floor)
      out.violations_x.push_back(out.psi_x_labels[i]);
  }
  out.psi_y_inputs = pivots.x_llv;
  out.psi_y.resize(static_cast<int>(out.psi_y_inputs.size()));
  for (std::size_t j = 0; j < out.psi_y_inputs.size(); ++j) {
    out.psi_y[static_cast<int>(j)] = psi_y_of(p, out.psi_y_inputs[j], pivots.x0, yll);
    if (out.psi_y[static_cast<int>(j)] < psi_floor)
      out.violations_y.push_back(out.psi_y_inputs[j]);
  }
  return out;
}

LlvReport d_llv(const CondLogProb& p, const CondLogProb& q, const PivotConfig& pivots,
                double lambda, double psi_floor) {
  require_same_grid(p, q);
  if (lambda <= 0.0) throw std::invalid_argument("d_llv: lambda must be positive");
  pivots.validate(p.n_inputs(), p.n_labels(),
                  static_cast<int>(pivots.x_llv.size()));

  const auto t1 = t1_term(p, q, pivots.y0, pivots.y_llv, psi_floor);
  const auto t2 = t2_term(p, q, pivots.x0, pivots.x_llv, pivots.y_llv, psi_floor);
  if (!t1.feasible || !t2.feasible) {
    std::ostringstream msg;
    msg << "d_llv: vanishing psi terms on these pivots:";
    if (!t1.vanished_p.empty()) msg << " psi_x(first model) labels {" << join_ints(t1.vanished_p) << "}";
    if (!t1.vanished_q.empty()) msg << " psi_x(second model) labels {" << join_ints(t1.vanished_q) << "}";
    if (!t2.vanished_p.empty()) msg << " psi_y(first model) inputs {" << join_ints(t2.vanished_p) << "}";
    if (!t2.vanished_q.empty()) msg << " psi_y(second model) inputs {" << join_ints(t2.vanished_q) << "}";
    throw std::runtime_error(msg.str());
  }

  LlvReport out;
  out.t1 = t1.value;
  out.t2 = t2.value;
  out.t3 = t3_term(p, q, pivots.y0, pivots.y_llv);
  out.t4 = t4_term(p, q, pivots.x0, pivots.x_llv, pivots.y_llv);
  out.lambda = lambda;
  out.value = std::max(std::max(out.t1, out.t2), lambda * std::max(out.t3, out.t4));
  out.pivots = pivots;
  return out;
}

PivotConfig select_pivots_group(const std::vector<const ModelTable*>& models,
                                const std::vector<const CondLogProb*>& dists,
                                const PivotSearchOptions& options) {
  if (models.size() != dists.size() || models.size() < 2)
    throw std::invalid_argument("select_pivots_group: need at least two models");
  const int n = dists[0]->n_inputs();
  const int k = dists[0]->n_labels();
  const int M = models[0]->dim();
  for (std::size_t m = 1; m < dists.size(); ++m) require_same_grid(*dists[0], *dists[m]);
  if (n < M + 1) throw std::invalid_argument("select_pivots_group: need at least M+1 inputs");
  if (k < 3) throw std::invalid_argument("select_pivots_group: need at least 3 labels");

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j)
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));

  // Stage 1: exhaustive over ordered (y0, excluded) pairs, minimize the
  // worst t1 over the group.
  struct LabelChoice {
    double score = std::numeric_limits<double>::infinity();
    int y0 = -1, excluded = -1;
  };
  const int n_label_pairs = k * (k - 1);
  std::vector<LabelChoice> choices(n_label_pairs);
#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < n_label_pairs; ++idx) {
    const int y0 = idx / (k - 1);
    int ex = idx % (k - 1);
    if (ex >= y0) ++ex;
    const auto yll = labels_without(k, ex);
    double worst = 0.0;
    bool ok = true;
    for (const auto& [i, j] : pairs) {
      const auto t1 = t1_term(*dists[i], *dists[j], y0, yll, options.psi_floor);
      if (!t1.feasible) {
        ok = false;
        break;
      }
      worst = std::max(worst, t1.value);
    }
    if (!ok) continue;
    // L must be invertible for every group member; with k = M+1 there are
    // no projection labels and the check does not apply.
    if (k >= M + 2) {
      PivotConfig probe;
      probe.y0 = y0;
      probe.excluded_label = ex;
      probe.y_llv = yll;
      const auto proj = probe.projection_labels(M);
      for (const auto* model : models) {
        Matrix L(M, M);
        for (int c = 0; c < M; ++c)
          L.col(c) = (model->unembeddings.row(proj[c]) - model->unembeddings.row(y0)).transpose();
        if (condition_number(L) >= options.cond_cap) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
    }
    choices[idx] = {worst, y0, ex};
  }
  LabelChoice best_label;
  for (const auto& c : choices)
    if (c.y0 >= 0 && c.score < best_label.score) best_label = c;  // first minimum wins ties
  if (best_label.y0 < 0)
    throw std::runtime_error(
        "select_pivots_group: no feasible (pivot, excluded) label pair; use a larger grid");

  const auto yll = labels_without(k, best_label.excluded);

  // Stage 2: sampled candidate input sets of size M+1, minimize the worst t2.
  Rng rng(options.seed);
  std::vector<std::vector<int>> candidates(options.n_input_sets);
  for (int c = 0; c < options.n_input_sets; ++c)
    candidates[c] = rng.sample_indices(n, M + 1);

  struct InputChoice {
    double score = std::numeric_limits<double>::infinity();
    int index = -1;
  };
  std::vector<InputChoice> input_scores(options.n_input_sets);
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < options.n_input_sets; ++c) {
    const auto& cand = candidates[c];
    const int x0 = cand[0];
    const std::vector<int> xs(cand.begin() + 1, cand.end());
    bool ok = true;
    for (int x : cand)
      if (dists[0]->input_weights[x] <= 0.0) ok = false;  // data support required
    if (!ok) continue;
    double worst = 0.0;
    for (const auto& [i, j] : pairs) {
      const auto t2 = t2_term(*dists[i], *dists[j], x0, xs, yll, options.psi_floor);
      if (!t2.feasible) {
        ok = false;
        break;
      }
      worst = std::max(worst, t2.value);
    }
    if (!ok) continue;
    for (const auto* model : models) {
      Matrix N(M, M);
      for (int col = 0; col < M; ++col)
        N.col(col) = (model->embeddings.row(xs[col]) - model->embeddings.row(x0)).transpose();
      if (condition_number(N) >= options.cond_cap) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    input_scores[c] = {worst, c};
  }
  InputChoice best_input;
  for (const auto& c : input_scores)
    if (c.index >= 0 && c.score < best_input.score) best_input = c;
  if (best_input.index < 0)
    throw std::runtime_error("select_pivots_group: no feasible input set; use a larger grid");

  PivotConfig out;
  out.y0 = best_label.y0;
  out.excluded_label = best_label.excluded;
  out.y_llv = yll;
  out.x0 = candidates[best_input.index][0];
  out.x_llv.assign(candidates[best_input.index].begin() + 1, candidates[best_input.index].end());
  out.validate(n, k, M);
  return out;
}

PivotConfig select_pivots(const ModelPair& pair, const PivotSearchOptions& options) {
  return select_pivots_group({&pair.a, &pair.b}, {&pair.pa, &pair.pb}, options);
}

}  // namespace repsim
