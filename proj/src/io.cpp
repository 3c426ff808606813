#include "repsim/io.hpp"

#include <nlohmann/json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "repsim/version.hpp"

namespace repsim {

namespace {

constexpr const char* kModelSchema = "repsim.model/1";
constexpr const char* kDatasetSchema = "repsim.dataset/1";
constexpr const char* kCheckpointSchema = "repsim.checkpoint/1";

Json matrix_to_flat(const Matrix& m) {
  Json out = Json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

Matrix matrix_from_flat(const Json& j, int rows, int cols, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols) {
    std::ostringstream msg;
    msg << "field '" << field << "': expected " << rows * cols << " numbers ("
        << rows << " x " << cols << " row-major), got "
        << (j.is_array() ? std::to_string(j.size()) : std::string("non-array"));
    throw std::invalid_argument(msg.str());
  }
  Matrix out(rows, cols);
  int idx = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) out(i, c) = j[idx++].get<double>();
  return out;
}

std::vector<std::string> ids_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw std::invalid_argument("field '" + field + "': expected an array of ids");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

const Json& need(const Json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end())
    throw std::invalid_argument(std::string("missing field '") + field + "'");
  return *it;
}

}  // namespace

Json model_to_json(const ModelTable& model) {
  Json j;
  j["schema"] = kModelSchema;
  j["M"] = model.dim();
  j["input_ids"] = model.input_ids;
  j["label_ids"] = model.label_ids;
  j["embeddings"] = matrix_to_flat(model.embeddings);
  j["unembeddings"] = matrix_to_flat(model.unembeddings);
  return j;
}

Json model_to_json(const ModelTable& model, const Vector& weights) {
  Json j = model_to_json(model);
  Json w = Json::array();
  for (int i = 0; i < weights.size(); ++i) w.push_back(weights[i]);
  j["weights"] = std::move(w);
  return j;
}

ModelTable model_from_json(const Json& j) {
  if (need(j, "schema").get<std::string>() != kModelSchema)
    throw std::invalid_argument("unrecognized model schema");
  const int M = need(j, "M").get<int>();
  ModelTable out;
  out.input_ids = ids_from_json(need(j, "input_ids"), "input_ids");
  out.label_ids = ids_from_json(need(j, "label_ids"), "label_ids");
  const int n = static_cast<int>(out.input_ids.size());
  const int k = static_cast<int>(out.label_ids.size());
  out.embeddings = matrix_from_flat(need(j, "embeddings"), n, M, "embeddings");
  out.unembeddings = matrix_from_flat(need(j, "unembeddings"), k, M, "unembeddings");
  out.validate();
  return out;
}

Vector weights_from_json(const Json& j, int n_inputs) {
  if (!j.contains("weights")) return Vector();
  const auto& w = j["weights"];
  if (!w.is_array() || static_cast<int>(w.size()) != n_inputs)
    throw std::invalid_argument("field 'weights': size does not match input count");
  Vector out(n_inputs);
  for (int i = 0; i < n_inputs; ++i) out[i] = w[i].get<double>();
  return out;
}

void save_model(const ModelTable& model, const std::string& path) {
  write_json(model_to_json(model), path);
}

void save_model(const ModelTable& model, const Vector& weights, const std::string& path) {
  write_json(model_to_json(model, weights), path);
}

ModelTable load_model(const std::string& path, Vector* weights) {
  const Json j = read_json(path);
  ModelTable out = model_from_json(j);
  if (weights) *weights = weights_from_json(j, out.n_inputs());
  return out;
}

Json pivot_to_json(const PivotConfig& pivots) {
  Json j;
  j["x0"] = pivots.x0;
  j["x_llv"] = pivots.x_llv;
  j["y0"] = pivots.y0;
  j["y_llv"] = pivots.y_llv;
  j["excluded_label"] = pivots.excluded_label;
  return j;
}

PivotConfig pivot_from_json(const Json& j) {
  PivotConfig out;
  out.x0 = need(j, "x0").get<int>();
  out.x_llv = need(j, "x_llv").get<std::vector<int>>();
  out.y0 = need(j, "y0").get<int>();
  out.y_llv = need(j, "y_llv").get<std::vector<int>>();
  out.excluded_label = need(j, "excluded_label").get<int>();
  return out;
}

Json llv_report_to_json(const LlvReport& report) {
  Json j;
  j["t1"] = report.t1;
  j["t2"] = report.t2;
  j["t3"] = report.t3;
  j["t4"] = report.t4;
  j["lambda"] = report.lambda;
  j["value"] = report.value;
  j["pivots"] = pivot_to_json(report.pivots);
  j["diagnostics"] = report.diagnostics;
  return j;
}

Json bound_certificate_to_json(const BoundCertificate& cert) {
  Json j;
  j["epsilon"] = cert.epsilon;
  j["lhs_emb"] = cert.lhs_emb;
  j["lhs_unemb"] = cert.lhs_unemb;
  j["rhs"] = cert.rhs;
  j["holds"] = cert.holds;
  j["vacuous"] = cert.vacuous;
  j["preconditions_ok"] = cert.preconditions_ok;
  j["diagnostics"] = cert.diagnostics;
  j["pivots"] = pivot_to_json(cert.pivots);
  return j;
}

Json similarity_report_to_json(const SimilarityReport& report) {
  Json j;
  j["m_svd"] = report.m_svd_value;
  j["d_svd"] = report.d_svd_value;
  Json sv = Json::array();
  for (int i = 0; i < report.singular_values.size(); ++i) sv.push_back(report.singular_values[i]);
  j["singular_values"] = std::move(sv);
  j["m_cca"] = report.m_cca_value;
  j["n_samples"] = report.n_samples;
  return j;
}

Json dataset_to_json(const AngularDataset& data) {
  Json j;
  j["schema"] = kDatasetSchema;
  j["n_classes"] = data.n_classes;
  j["sigma"] = data.sigma;
  j["seed"] = data.seed;
  j["points"] = matrix_to_flat(data.points);
  j["labels"] = data.labels;
  return j;
}

AngularDataset dataset_from_json(const Json& j) {
  if (need(j, "schema").get<std::string>() != kDatasetSchema)
    throw std::invalid_argument("unrecognized dataset schema");
  AngularDataset out;
  out.n_classes = need(j, "n_classes").get<int>();
  out.sigma = need(j, "sigma").get<double>();
  out.seed = need(j, "seed").get<std::uint64_t>();
  out.labels = need(j, "labels").get<std::vector<int>>();
  const int n = static_cast<int>(out.labels.size());
  out.points = matrix_from_flat(need(j, "points"), n, 2, "points");
  return out;
}

Json checkpoint_to_json(const TrainedModel& model) {
  Json j;
  j["schema"] = kCheckpointSchema;
  j["version"] = kVersion;
  Json layers = Json::array();
  for (std::size_t l = 0; l < model.params.w.size(); ++l) {
    Json layer;
    layer["rows"] = model.params.w[l].rows();
    layer["cols"] = model.params.w[l].cols();
    layer["w"] = matrix_to_flat(model.params.w[l]);
    Json b = Json::array();
    for (int i = 0; i < model.params.b[l].size(); ++i) b.push_back(model.params.b[l][i]);
    layer["b"] = std::move(b);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  j["unembeddings"] = matrix_to_flat(model.params.unembeddings);
  j["n_classes"] = model.params.n_classes();
  j["leaky_slope"] = model.params.leaky_slope;
  j["normalize_embedding"] = model.params.normalize_embedding;
  j["final_accuracy"] = model.final_accuracy;
  j["loss_curve"] = model.loss_curve;
  Json cfg;
  cfg["width"] = model.config.width;
  cfg["n_classes"] = model.config.n_classes;
  cfg["batch"] = model.config.batch;
  cfg["steps"] = model.config.steps;
  cfg["lr"] = model.config.lr;
  cfg["seed"] = model.config.seed;
  j["config"] = std::move(cfg);
  return j;
}

TrainedModel checkpoint_from_json(const Json& j) {
  if (need(j, "schema").get<std::string>() != kCheckpointSchema)
    throw std::invalid_argument("unrecognized checkpoint schema");
  TrainedModel out;
  for (const auto& layer : need(j, "layers")) {
    const int rows = need(layer, "rows").get<int>();
    const int cols = need(layer, "cols").get<int>();
    out.params.w.push_back(matrix_from_flat(need(layer, "w"), rows, cols, "w"));
    const auto& b = need(layer, "b");
    Vector bias(rows);
    for (int i = 0; i < rows; ++i) bias[i] = b[i].get<double>();
    out.params.b.push_back(std::move(bias));
  }
  const int c = need(j, "n_classes").get<int>();
  out.params.unembeddings = matrix_from_flat(need(j, "unembeddings"), c, 2, "unembeddings");
  out.params.leaky_slope = need(j, "leaky_slope").get<double>();
  out.params.normalize_embedding = need(j, "normalize_embedding").get<bool>();
  out.final_accuracy = need(j, "final_accuracy").get<double>();
  out.loss_curve = need(j, "loss_curve").get<std::vector<double>>();
  const auto& cfg = need(j, "config");
  out.config.width = need(cfg, "width").get<int>();
  out.config.n_classes = need(cfg, "n_classes").get<int>();
  out.config.batch = need(cfg, "batch").get<int>();
  out.config.steps = need(cfg, "steps").get<int>();
  out.config.lr = need(cfg, "lr").get<double>();
  out.config.seed = need(cfg, "seed").get<std::uint64_t>();
  return out;
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

std::string CsvWriter::format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("CsvWriter: cell count does not match the column order");
  rows_.push_back(cells);
}

std::string CsvWriter::str() const {
  std::ostringstream out;
  out << "# repsim." << name_ << "/1\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << columns_[c];
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  return out.str();
}

void CsvWriter::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << str();
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string cond_log_prob_csv(const CondLogProb& dist, const ModelTable& model) {
  std::vector<std::string> columns{"input_id", "weight"};
  for (const auto& id : model.label_ids) columns.push_back(id);
  CsvWriter csv("cond_log_prob", columns);
  for (int i = 0; i < dist.n_inputs(); ++i) {
    std::vector<std::string> row{model.input_ids[i], CsvWriter::format(dist.input_weights[i])};
    for (int j = 0; j < dist.n_labels(); ++j) row.push_back(CsvWriter::format(dist.logp(i, j)));
    csv.add_row(row);
  }
  return csv.str();
}

}  // namespace repsim
