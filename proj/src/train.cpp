#include "repsim/train.hpp"

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
constexpr double kNormTarget = 20.0;

double leaky(double a, double slope) { return a > 0.0 ? a : slope * a; }
double leaky_grad(double a, double slope) { return a > 0.0 ? 1.0 : slope; }

struct ForwardTrace {
  std::vector<Matrix> pre;   // pre-activations per hidden layer
  std::vector<Matrix> post;  // post-activations (post[0] is the input)
  Matrix f;                  // raw embedding output
  Matrix fn;                 // embedding after the optional norm projection
};

ForwardTrace forward_trace(const MlpParams& params, const Matrix& x, double slope) {
  ForwardTrace t;
  t.post.push_back(x);
  Matrix h = x;
  for (std::size_t l = 0; l + 1 < params.w.size(); ++l) {
    Matrix a = h * params.w[l].transpose();
    a.rowwise() += params.b[l].transpose();
    t.pre.push_back(a);
    h = a.unaryExpr([slope](double v) { return leaky(v, slope); });
    t.post.push_back(h);
  }
  t.f = h * params.w.back().transpose();
  t.f.rowwise() += params.b.back().transpose();
  if (params.normalize_embedding) {
    t.fn = t.f;
    for (int i = 0; i < t.fn.rows(); ++i) {
      const double norm = t.f.row(i).norm();
      t.fn.row(i) *= kNormTarget / norm;
    }
  } else {
    t.fn = t.f;
  }
  return t;
}

// Softmax cross-entropy over logits fn * U^T; returns mean loss and fills
// the gradient w.r.t. the logits (already divided by the batch size).
double ce_loss_and_dlogits(const Matrix& fn, const Matrix& unemb, const std::vector<int>& y,
                           Matrix* dlogits) {
  const int B = static_cast<int>(fn.rows());
  const int c = static_cast<int>(unemb.rows());
  Matrix logits = fn * unemb.transpose();
  double loss = 0.0;
  if (dlogits) dlogits->resize(B, c);
  for (int i = 0; i < B; ++i) {
    const double mx = logits.row(i).maxCoeff();
    double acc = 0.0;
    for (int j = 0; j < c; ++j) acc += std::exp(logits(i, j) - mx);
    const double lse = mx + std::log(acc);
    loss += lse - logits(i, y[i]);
    if (dlogits) {
      for (int j = 0; j < c; ++j)
        (*dlogits)(i, j) = std::exp(logits(i, j) - lse) / static_cast<double>(B);
      (*dlogits)(i, y[i]) -= 1.0 / static_cast<double>(B);
    }
  }
  return loss / static_cast<double>(B);
}

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  Matrix mu, vu;
  long t = 0;

  explicit AdamState(const MlpParams& p) {
    for (const auto& w : p.w) {
      mw.push_back(Matrix::Zero(w.rows(), w.cols()));
      vw.push_back(Matrix::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.b) {
      mb.push_back(Vector::Zero(b.size()));
      vb.push_back(Vector::Zero(b.size()));
    }
    mu = Matrix::Zero(p.unembeddings.rows(), p.unembeddings.cols());
    vu = Matrix::Zero(p.unembeddings.rows(), p.unembeddings.cols());
  }

  static void update_matrix(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                            const TrainConfig& c, double bc1, double bc2) {
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
    param.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.adam_eps);
  }

  static void update_vector(Vector& param, const Vector& grad, Vector& m, Vector& v,
                            const TrainConfig& c, double bc1, double bc2) {
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
    param.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.adam_eps);
  }

  void step(MlpParams& p, const MlpGradients& g, const TrainConfig& c) {
    ++t;
    const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(t));
    for (std::size_t l = 0; l < p.w.size(); ++l) {
      update_matrix(p.w[l], g.w[l], mw[l], vw[l], c, bc1, bc2);
      update_vector(p.b[l], g.b[l], mb[l], vb[l], c, bc1, bc2);
    }
    update_matrix(p.unembeddings, g.unembeddings, mu, vu, c, bc1, bc2);
  }
};

void apply_norm_constraint(MlpParams& params, NormConstraint mode) {
  if (mode == NormConstraint::kUnemb20 || mode == NormConstraint::kBoth20) {
    for (int j = 0; j < params.unembeddings.rows(); ++j)
      params.unembeddings.row(j) *= kNormTarget / params.unembeddings.row(j).norm();
  }
}

}  // namespace

int angular_label(double x, double y, int n_classes) {
  double theta = std::atan2(y, x);  // (-pi, pi]
  if (theta < 0.0) theta += 2.0 * kPi;
  double half = std::fmod(theta, kPi);
  // guard against fmod returning pi through rounding
  if (half >= kPi) half -= kPi;
  const int label = static_cast<int>(half / (kPi / static_cast<double>(n_classes)));
  return std::min(label, n_classes - 1);
}

AngularDataset gen_angular_data(int n_classes, int n, double sigma, std::uint64_t seed) {
  if (n_classes < 2 || n_classes % 2 != 0)
    throw std::invalid_argument("gen_angular_data: class count must be even (opposite slices pair up)");
  if (n < 1) throw std::invalid_argument("gen_angular_data: n must be positive");
  AngularDataset out;
  out.n_classes = n_classes;
  out.sigma = sigma;
  out.seed = seed;
  out.points.resize(n, 2);
  out.labels.resize(n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double x = sigma * rng.normal();
    const double y = sigma * rng.normal();
    out.points(i, 0) = x;
    out.points(i, 1) = y;
    out.labels[i] = angular_label(x, y, n_classes);
  }
  return out;
}

void TrainConfig::validate() const {
  if (width < 1) throw std::invalid_argument("TrainConfig: width must be positive");
  if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be positive");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be positive");
  if (n_classes < 2) throw std::invalid_argument("TrainConfig: need at least two classes");
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
    throw std::invalid_argument("TrainConfig: holdout fraction must be in (0, 1)");
}

MlpParams MlpParams::init(const TrainConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  MlpParams p;
  const int w = config.width;
  const std::vector<std::pair<int, int>> shapes{{w, 2}, {w, w}, {w, w}, {2, w}};
  for (const auto& [rows, cols] : shapes) {
    Matrix weight(rows, cols);
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) weight(r, c) = scale * rng.normal();
    p.w.push_back(std::move(weight));
    p.b.push_back(Vector::Zero(rows));
  }
  p.unembeddings.resize(config.n_classes, 2);
  for (int r = 0; r < config.n_classes; ++r)
    for (int c = 0; c < 2; ++c) p.unembeddings(r, c) = 0.5 * rng.normal();
  p.leaky_slope = config.leaky_slope;
  p.normalize_embedding =
      config.constraint == NormConstraint::kEmb20 || config.constraint == NormConstraint::kBoth20;
  if (config.constraint == NormConstraint::kUnemb20 || config.constraint == NormConstraint::kBoth20)
    apply_norm_constraint(p, NormConstraint::kUnemb20);
  return p;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& x) {
  return forward_trace(params, x, params.leaky_slope).fn;
}

double batch_loss_only(const MlpParams& params, const Matrix& x, const std::vector<int>& y) {
  const auto t = forward_trace(params, x, params.leaky_slope);
  return ce_loss_and_dlogits(t.fn, params.unembeddings, y, nullptr);
}

BatchLoss mlp_backward(const MlpParams& params, const Matrix& x, const std::vector<int>& y) {
  const double slope = params.leaky_slope;
  if (!x.allFinite()) throw std::runtime_error("mlp_backward: non-finite input batch");
  const auto t = forward_trace(params, x, slope);
  if (!t.fn.allFinite()) throw std::runtime_error("mlp_backward: non-finite activations");

  BatchLoss out;
  Matrix dlogits;
  out.loss = ce_loss_and_dlogits(t.fn, params.unembeddings, y, &dlogits);

  out.grads.unembeddings = dlogits.transpose() * t.fn;
  Matrix dfn = dlogits * params.unembeddings;

  Matrix df;
  if (params.normalize_embedding) {
    df.resize(dfn.rows(), dfn.cols());
    for (int i = 0; i < dfn.rows(); ++i) {
      const double norm = t.f.row(i).norm();
      const Vector fhat = t.f.row(i).transpose() / norm;
      const Vector g = dfn.row(i).transpose();
      df.row(i) = (kNormTarget / norm) * (g - fhat * fhat.dot(g)).transpose();
    }
  } else {
    df = dfn;
  }

  const int L = static_cast<int>(params.w.size());
  out.grads.w.resize(L);
  out.grads.b.resize(L);
  Matrix delta = df;  // gradient w.r.t. the current layer's output
  for (int l = L - 1; l >= 0; --l) {
    out.grads.w[l] = delta.transpose() * t.post[l];
    out.grads.b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix dh = delta * params.w[l];
      delta = dh.cwiseProduct(
          t.pre[l - 1].unaryExpr([slope](double a) { return leaky_grad(a, slope); }));
    }
  }
  return out;
}

std::vector<double*> parameter_views(MlpParams& params) {
  std::vector<double*> out;
  for (auto& w : params.w)
    for (int i = 0; i < w.size(); ++i) out.push_back(w.data() + i);
  for (auto& b : params.b)
    for (int i = 0; i < b.size(); ++i) out.push_back(b.data() + i);
  for (int i = 0; i < params.unembeddings.size(); ++i)
    out.push_back(params.unembeddings.data() + i);
  return out;
}

std::vector<int> holdout_indices(const AngularDataset& data, double fraction) {
  const int n = static_cast<int>(data.points.rows());
  const int n_hold = std::max(1, static_cast<int>(std::lround(fraction * n)));
  std::vector<int> out(n_hold);
  for (int i = 0; i < n_hold; ++i) out[i] = n - n_hold + i;
  return out;
}

ModelTable TrainedModel::to_table(const Matrix& inputs) const {
  ModelTable out;
  out.embeddings = mlp_forward(params, inputs);
  out.unembeddings = params.unembeddings;
  out.input_ids = ModelTable::default_ids("x", static_cast<int>(inputs.rows()));
  out.label_ids = ModelTable::default_ids("y", params.n_classes());
  return out;
}

TrainedModel train(const TrainConfig& config, const AngularDataset& data) {
  config.validate();
  if (data.n_classes != config.n_classes)
    throw std::invalid_argument("train: dataset class count does not match the config");
  const int n = static_cast<int>(data.points.rows());
  const auto holdout = holdout_indices(data, config.holdout_fraction);
  const int n_train = n - static_cast<int>(holdout.size());
  if (n_train < config.batch)
    throw std::invalid_argument("train: training split smaller than one batch");

  TrainedModel out;
  out.config = config;
  out.params = MlpParams::init(config, config.seed);
  AdamState adam(out.params);
  Rng batch_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  Matrix batch_x(config.batch, 2);
  std::vector<int> batch_y(config.batch);
  out.loss_curve.reserve(config.steps);
  for (int step = 0; step < config.steps; ++step) {
    for (int s = 0; s < config.batch; ++s) {
      const int idx = batch_rng.uniform_int(n_train);
      batch_x.row(s) = data.points.row(idx);
      batch_y[s] = data.labels[idx];
    }
    BatchLoss result;
    try {
      result = mlp_backward(out.params, batch_x, batch_y);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "train: divergence at step " << step << " (seed " << config.seed << ", width "
          << config.width << "): " << e.what();
      throw std::runtime_error(msg.str());
    }
    if (!std::isfinite(result.loss)) {
      std::ostringstream msg;
      msg << "train: loss became non-finite at step " << step << " (seed " << config.seed
          << ", width " << config.width << ")";
      throw std::runtime_error(msg.str());
    }
    out.loss_curve.push_back(result.loss);
    if (config.lr != 0.0) {
      adam.step(out.params, result.grads, config);
      apply_norm_constraint(out.params, config.constraint);
    }
  }

  // held-out accuracy
  Matrix hx(static_cast<int>(holdout.size()), 2);
  for (std::size_t i = 0; i < holdout.size(); ++i) hx.row(static_cast<int>(i)) = data.points.row(holdout[i]);
  const Matrix emb = mlp_forward(out.params, hx);
  const Matrix logits = emb * out.params.unembeddings.transpose();
  int correct = 0;
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    int arg = 0;
    logits.row(static_cast<int>(i)).maxCoeff(&arg);
    correct += (arg == data.labels[holdout[i]]);
  }
  out.final_accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
  return out;
}

std::vector<WidthSweepRow> width_sweep(int n_classes, const WidthSweepOptions& options) {
  const AngularDataset data =
      gen_angular_data(n_classes, options.data_size, options.data_sigma, options.data_seed);
  const auto holdout = holdout_indices(data, 0.2);
  if (static_cast<int>(holdout.size()) < options.eval_grid_size)
    throw std::invalid_argument("width_sweep: held-out split smaller than the evaluation grid");
  Matrix eval_grid(options.eval_grid_size, 2);
  for (int i = 0; i < options.eval_grid_size; ++i) eval_grid.row(i) = data.points.row(holdout[i]);

  std::vector<WidthSweepRow> rows;
  for (int width : options.widths) {
    WidthSweepRow row;
    row.n_classes = n_classes;
    row.width = width;

    std::vector<TrainedModel> trained(options.n_seeds);
    std::vector<std::string> failures(options.n_seeds);
#pragma omp parallel for schedule(dynamic)
    for (int seed = 0; seed < options.n_seeds; ++seed) {
      TrainConfig config;
      config.width = width;
      config.n_classes = n_classes;
      config.steps = options.steps;
      config.seed = static_cast<std::uint64_t>(seed);
      try {
        trained[seed] = train(config, data);
      } catch (const std::exception& e) {
        failures[seed] = e.what();
        trained[seed].final_accuracy = -1.0;
      }
    }

    std::vector<ModelTable> tables;
    std::vector<CondLogProb> dists;
    for (int seed = 0; seed < options.n_seeds; ++seed) {
      if (trained[seed].final_accuracy > options.retain_accuracy)
        tables.push_back(trained[seed].to_table(eval_grid));
      if (!failures[seed].empty()) row.note += failures[seed] + "; ";
    }
    row.n_retained = static_cast<int>(tables.size());
    if (row.n_retained < options.min_retained) {
      row.skipped = true;
      row.note += "fewer than " + std::to_string(options.min_retained) + " retained models";
      rows.push_back(row);
      continue;
    }
    dists.reserve(tables.size());
    for (const auto& t : tables) dists.push_back(cond_log_probs(t));

    std::vector<const ModelTable*> model_ptrs;
    std::vector<const CondLogProb*> dist_ptrs;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      model_ptrs.push_back(&tables[i]);
      dist_ptrs.push_back(&dists[i]);
    }
    PivotSearchOptions pivot_options;
    pivot_options.seed = options.data_seed;
    const PivotConfig pivots = select_pivots_group(model_ptrs, dist_ptrs, pivot_options);

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < tables.size(); ++i)
      for (std::size_t j = i + 1; j < tables.size(); ++j)
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    const int n_pairs = static_cast<int>(pairs.size());
    row.pairwise_d_llv.resize(n_pairs);
    row.pairwise_max_d_svd.resize(n_pairs);
    row.pairwise_epsilon.resize(n_pairs);
    row.pairwise_bound_holds.resize(n_pairs);
    row.pairwise_bound_vacuous.resize(n_pairs);
#pragma omp parallel for schedule(dynamic)
    for (int p = 0; p < n_pairs; ++p) {
      const auto [i, j] = pairs[p];
      ModelPair pair = ModelPair::make(tables[i], tables[j]);
      BoundOptions bound_options;
      bound_options.lambda = options.lambda;
      const BoundCertificate cert = verify_bound(pair, pivots, bound_options);
      row.pairwise_d_llv[p] = cert.epsilon;
      row.pairwise_max_d_svd[p] = std::max(cert.lhs_emb, cert.lhs_unemb);
      row.pairwise_epsilon[p] = cert.epsilon;
      row.pairwise_bound_holds[p] = cert.holds ? 1 : 0;
      row.pairwise_bound_vacuous[p] = cert.vacuous ? 1 : 0;
    }

    const auto mean_of = [](const std::vector<double>& v) {
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc / static_cast<double>(v.size());
    };
    const auto std_of = [&](const std::vector<double>& v) {
      if (v.size() < 2) return 0.0;
      const double m = mean_of(v);
      double acc = 0.0;
      for (double x : v) acc += (x - m) * (x - m);
      return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };
    row.mean_d_llv = mean_of(row.pairwise_d_llv);
    row.std_d_llv = std_of(row.pairwise_d_llv);
    row.mean_max_d_svd = mean_of(row.pairwise_max_d_svd);
    row.std_max_d_svd = std_of(row.pairwise_max_d_svd);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace repsim
