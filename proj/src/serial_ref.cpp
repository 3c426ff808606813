#include "repsim/serial_ref.hpp"

#include <cmath>
#include <stdexcept>

namespace repsim::serial_ref {

CondLogProb cond_log_probs(const ModelTable& model, const Vector& weights) {
  model.validate();
  const int n = model.n_inputs(), k = model.n_labels(), M = model.dim();
  CondLogProb out;
  out.logp.resize(n, k);
  out.input_weights = weights;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      double logit = 0.0;
      for (int c = 0; c < M; ++c) logit += model.embeddings(i, c) * model.unembeddings(j, c);
      out.logp(i, j) = logit;
    }
    double mx = out.logp(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, out.logp(i, j));
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += std::exp(out.logp(i, j) - mx);
    const double lse = mx + std::log(acc);
    for (int j = 0; j < k; ++j) out.logp(i, j) -= lse;
  }
  return out;
}

double d_kl(const CondLogProb& p, const CondLogProb& q) {
  double total = 0.0;
  for (int i = 0; i < p.n_inputs(); ++i) {
    double row = 0.0;
    for (int j = 0; j < p.n_labels(); ++j)
      row += std::exp(p.logp(i, j)) * (p.logp(i, j) - q.logp(i, j));
    total += p.input_weights[i] * row;
  }
  return total;
}

PsiTerms psi_terms(const CondLogProb& p, const PivotConfig& pivots, double psi_floor) {
  PsiTerms out;
  for (int y : pivots.y_llv)
    if (y != pivots.y0) out.psi_x_labels.push_back(y);
  out.psi_x.resize(static_cast<int>(out.psi_x_labels.size()));
  for (std::size_t i = 0; i < out.psi_x_labels.size(); ++i) {
    const int y = out.psi_x_labels[i];
    double mean = 0.0;
    for (int r = 0; r < p.n_inputs(); ++r)
      mean += p.input_weights[r] * (p.logp(r, y) - p.logp(r, pivots.y0));
    double var = 0.0;
    for (int r = 0; r < p.n_inputs(); ++r) {
      const double d = p.logp(r, y) - p.logp(r, pivots.y0) - mean;
      var += p.input_weights[r] * d * d;
    }
    out.psi_x[static_cast<int>(i)] = std::sqrt(var);
    if (out.psi_x[static_cast<int>(i)] < psi_floor) out.violations_x.push_back(y);
  }
  out.psi_y_inputs = pivots.x_llv;
  out.psi_y.resize(static_cast<int>(pivots.x_llv.size()));
  const double kll = static_cast<double>(pivots.y_llv.size());
  for (std::size_t j = 0; j < pivots.x_llv.size(); ++j) {
    const int x = pivots.x_llv[j];
    double mean = 0.0;
    for (int y : pivots.y_llv) mean += p.logp(x, y) - p.logp(pivots.x0, y);
    mean /= kll;
    double var = 0.0;
    for (int y : pivots.y_llv) {
      const double d = p.logp(x, y) - p.logp(pivots.x0, y) - mean;
      var += d * d;
    }
    out.psi_y[static_cast<int>(j)] = std::sqrt(var / kll);
    if (out.psi_y[static_cast<int>(j)] < psi_floor) out.violations_y.push_back(x);
  }
  return out;
}

}  // namespace repsim::serial_ref
