#include "repsim/experiments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "repsim/bound.hpp"
#include "repsim/version.hpp"

namespace repsim {

Profile profile_from_string(const std::string& s) {
  if (s == "ci") return Profile::kCi;
  if (s == "full") return Profile::kFull;
  throw std::invalid_argument("unknown profile '" + s + "' (expected ci or full)");
}

std::string table1_csv(const std::vector<RhoSweepRecord>& records) {
  CsvWriter csv("table1", {"rho", "d_kl_pq", "d_kl_qp", "d_llv", "m_cca", "max_d_svd"});
  for (const auto& r : records)
    csv.add_row({CsvWriter::format(r.rho), CsvWriter::format(r.d_kl_pq),
                 CsvWriter::format(r.d_kl_qp), CsvWriter::format(r.d_llv),
                 CsvWriter::format(r.m_cca), CsvWriter::format(r.max_d_svd)});
  return csv.str();
}

std::vector<RhoSweepRecord> run_table1(const Table1Config& config) {
  if (config.rho_values.empty())
    throw std::invalid_argument("table1: at least one rho value required");
  RhoFamily family;
  family.rho_values = config.rho_values;
  std::sort(family.rho_values.begin(), family.rho_values.end());
  family.base = table1_circle_params(config.seed);
  PivotSearchOptions pivot_options;
  pivot_options.seed = config.seed;
  const auto records = rho_sweep(family, config.lambda, pivot_options);
  if (!config.out_path.empty()) {
    std::ofstream out(config.out_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + config.out_path);
    out << table1_csv(records);
  }
  return records;
}

std::string bound_sweep_csv(const std::vector<BoundSweepRecord>& records) {
  CsvWriter csv("bound_sweep",
                {"param", "epsilon", "lhs_emb", "lhs_unemb", "rhs", "holds", "vacuous"});
  for (const auto& r : records)
    csv.add_row({CsvWriter::format(r.sigma), CsvWriter::format(r.cert.epsilon),
                 CsvWriter::format(r.cert.lhs_emb), CsvWriter::format(r.cert.lhs_unemb),
                 CsvWriter::format(r.cert.rhs), r.cert.holds ? "true" : "false",
                 r.cert.vacuous ? "true" : "false"});
  return csv.str();
}

std::vector<BoundSweepRecord> run_bound_sweep(const BoundSweepConfig& config) {
  if (config.sigmas.empty())
    throw std::invalid_argument("bound-sweep: at least one sigma required");
  std::vector<double> sigmas = config.sigmas;
  std::sort(sigmas.begin(), sigmas.end());

  // Reference: circle model with the identity permutation; the perturbed
  // partner adds Gaussian noise to the embeddings only.
  CirclePairParams params;
  params.k = 8;
  params.rho = 4.0;
  params.points_per_label = 64;
  params.permutation = PermutationSpec::identity(params.k);
  params.radius_scale = 1.0;
  params.radius_sigma = 0.05;
  params.seed = config.seed;
  const ConstructedPair base = build_circle_pair(params);
  const ModelTable& reference = base.a;

  std::vector<BoundSweepRecord> out;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double sigma = sigmas[i];
    const ModelTable perturbed =
        perturb_embeddings(reference, sigma, config.seed + 1000 + i);
    ModelPair pair = ModelPair::make(reference, perturbed, base.data_weights);
    PivotSearchOptions pivot_options;
    pivot_options.seed = config.seed;
    const PivotConfig pivots = select_pivots(pair, pivot_options);
    BoundOptions bound_options;
    bound_options.lambda = config.lambda;
    BoundSweepRecord rec;
    rec.sigma = sigma;
    rec.cert = verify_bound(pair, pivots, bound_options);
    out.push_back(std::move(rec));
  }
  if (!config.out_path.empty()) {
    std::ofstream f(config.out_path);
    if (!f) throw std::runtime_error("cannot open for writing: " + config.out_path);
    f << bound_sweep_csv(out);
  }
  return out;
}

WidthSweepOptions resolve_width_options(const WidthSweepConfig& config) {
  WidthSweepOptions options;
  if (config.profile == Profile::kCi) {
    options.widths = {16, 64};
    options.n_seeds = 5;
    options.steps = 3000;
  } else {
    options.widths = {16, 32, 64, 128, 256};
    options.n_seeds = 20;
    options.steps = 15000;
  }
  if (!config.widths.empty()) options.widths = config.widths;
  if (config.n_seeds > 0) options.n_seeds = config.n_seeds;
  if (config.steps > 0) options.steps = config.steps;
  options.lambda = config.lambda;
  options.data_seed = config.data_seed;
  return options;
}

std::string width_sweep_csv(const std::vector<WidthSweepRow>& rows) {
  CsvWriter csv("width_sweep", {"c", "width", "n_retained", "mean_d_llv", "std_d_llv",
                                "mean_max_d_svd", "std_max_d_svd"});
  for (const auto& r : rows) {
    if (r.skipped) {
      csv.add_row({std::to_string(r.n_classes), std::to_string(r.width),
                   std::to_string(r.n_retained), "", "", "", ""});
      continue;
    }
    // with a single pair the spread is undefined; emit empty cells
    const bool single = r.pairwise_d_llv.size() < 2;
    csv.add_row({std::to_string(r.n_classes), std::to_string(r.width),
                 std::to_string(r.n_retained), CsvWriter::format(r.mean_d_llv),
                 single ? "" : CsvWriter::format(r.std_d_llv),
                 CsvWriter::format(r.mean_max_d_svd),
                 single ? "" : CsvWriter::format(r.std_max_d_svd)});
  }
  return csv.str();
}

std::vector<WidthSweepRow> run_width_sweep(const WidthSweepConfig& config) {
  const WidthSweepOptions options = resolve_width_options(config);
  auto rows = width_sweep(config.n_classes, options);
  if (!config.out_path.empty()) {
    std::ofstream f(config.out_path);
    if (!f) throw std::runtime_error("cannot open for writing: " + config.out_path);
    f << width_sweep_csv(rows);
  }
  return rows;
}

Json compare_models(const ModelTable& a, const ModelTable& b, const Vector& weights,
                    double lambda, int n_input_sets, std::uint64_t seed) {
  ModelPair pair = ModelPair::make(a, b, weights);
  PivotSearchOptions pivot_options;
  pivot_options.n_input_sets = n_input_sets;
  pivot_options.seed = seed;
  const PivotConfig pivots = select_pivots(pair, pivot_options);

  const LlvReport llv = d_llv(pair.pa, pair.pb, pivots, lambda);
  BoundOptions bound_options;
  bound_options.lambda = lambda;
  const BoundCertificate cert = verify_bound(pair, pivots, bound_options);

  SimilarityReport sim;
  const auto z1 = projected_embeddings(pair.a, pair.pa, pivots);
  const auto z2 = projected_embeddings(pair.b, pair.pb, pivots);
  const Matrix sigma = cross_covariance(standardize(z1), standardize(z2));
  const auto svd = pls_svd(sigma);
  sim.singular_values = svd.singular_values;
  sim.m_svd_value = svd.singular_values.mean();
  sim.d_svd_value = 1.0 - sim.m_svd_value;
  sim.n_samples = pair.n_inputs();
  sim.m_cca_value = m_cca(SampleMatrix{pair.a.embeddings, weights},
                          SampleMatrix{pair.b.embeddings, weights});

  Json report;
  report["version"] = kVersion;
  Json cfg;
  cfg["lambda"] = lambda;
  cfg["n_input_sets"] = n_input_sets;
  cfg["seed"] = seed;
  report["config"] = std::move(cfg);
  Json distance;
  distance["d_kl_pq"] = d_kl(pair.pa, pair.pb);
  distance["d_kl_qp"] = d_kl(pair.pb, pair.pa);
  distance["d_llv"] = llv_report_to_json(llv);
  report["distance"] = std::move(distance);
  report["similarity"] = similarity_report_to_json(sim);
  report["bound"] = bound_certificate_to_json(cert);
  return report;
}

Json run_compare(const CompareConfig& config) {
  Vector weights_a, weights_b;
  const ModelTable a = load_model(config.model_a_path, &weights_a);
  const ModelTable b = load_model(config.model_b_path, &weights_b);

  std::vector<std::string> mismatches;
  if (a.dim() != b.dim())
    mismatches.push_back("M: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  if (a.n_inputs() != b.n_inputs())
    mismatches.push_back("input count: " + std::to_string(a.n_inputs()) + " vs " +
                         std::to_string(b.n_inputs()));
  if (a.n_labels() != b.n_labels())
    mismatches.push_back("label count: " + std::to_string(a.n_labels()) + " vs " +
                         std::to_string(b.n_labels()));
  if (mismatches.empty() && a.input_ids != b.input_ids) mismatches.push_back("input_ids differ");
  if (mismatches.empty() && a.label_ids != b.label_ids) mismatches.push_back("label_ids differ");
  if (!mismatches.empty()) {
    std::ostringstream msg;
    msg << "compare: model grids do not match:";
    for (const auto& m : mismatches) msg << "\n  " << m;
    throw std::invalid_argument(msg.str());
  }
  if (weights_a.size() > 0 && weights_b.size() > 0 &&
      (weights_a - weights_b).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("compare: models carry different input weights");

  const Vector weights =
      weights_a.size() > 0 ? weights_a
                           : (weights_b.size() > 0 ? weights_b : uniform_weights(a.n_inputs()));
  const Json report =
      compare_models(a, b, weights, config.lambda, config.n_input_sets, config.seed);
  if (!config.out_path.empty()) write_json(report, config.out_path);
  return report;
}

AngularDataset run_gen_data(const GenDataConfig& config) {
  const AngularDataset data = gen_angular_data(config.n_classes, config.n, config.sigma, config.seed);
  if (!config.out_path.empty()) write_json(dataset_to_json(data), config.out_path);
  return data;
}

TrainedModel run_train(const TrainCliConfig& config) {
  const AngularDataset data = dataset_from_json(read_json(config.data_path));
  TrainConfig train_config;
  train_config.width = config.width;
  train_config.n_classes = data.n_classes;
  train_config.steps = config.steps;
  train_config.lr = config.lr;
  train_config.seed = config.seed;
  if (config.constraint == "none")
    train_config.constraint = NormConstraint::kNone;
  else if (config.constraint == "emb20")
    train_config.constraint = NormConstraint::kEmb20;
  else if (config.constraint == "unemb20")
    train_config.constraint = NormConstraint::kUnemb20;
  else if (config.constraint == "both20")
    train_config.constraint = NormConstraint::kBoth20;
  else
    throw std::invalid_argument("train: unknown constraint '" + config.constraint + "'");

  const TrainedModel model = train(train_config, data);
  if (!config.out_path.empty()) write_json(checkpoint_to_json(model), config.out_path);
  if (!config.table_out_path.empty()) {
    const auto holdout = holdout_indices(data, train_config.holdout_fraction);
    const int grid = std::min<int>(2000, static_cast<int>(holdout.size()));
    Matrix inputs(grid, 2);
    for (int i = 0; i < grid; ++i) inputs.row(i) = data.points.row(holdout[i]);
    save_model(model.to_table(inputs), config.table_out_path);
  }
  return model;
}

}  // namespace repsim
