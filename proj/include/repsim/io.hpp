#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "repsim/bound.hpp"
#include "repsim/distributional.hpp"
#include "repsim/model.hpp"
#include "repsim/train.hpp"

namespace repsim {

using Json = nlohmann::json;

// Model tables travel as JSON objects:
//   { "schema": "repsim.model/1", "M": 2,
//     "input_ids": [...], "label_ids": [...],
//     "embeddings": [... n*M row-major ...],
//     "unembeddings": [... k*M row-major ...],
//     "weights": [... n ...] }        // optional
// Loading validates shapes and reports mismatches field by field.

Json model_to_json(const ModelTable& model);
Json model_to_json(const ModelTable& model, const Vector& weights);
ModelTable model_from_json(const Json& j);
/// Optional per-input weights stored with the model; empty when absent.
Vector weights_from_json(const Json& j, int n_inputs);

void save_model(const ModelTable& model, const std::string& path);
void save_model(const ModelTable& model, const Vector& weights, const std::string& path);
ModelTable load_model(const std::string& path, Vector* weights = nullptr);

Json pivot_to_json(const PivotConfig& pivots);
PivotConfig pivot_from_json(const Json& j);

Json llv_report_to_json(const LlvReport& report);
Json bound_certificate_to_json(const BoundCertificate& cert);

struct SimilarityReport {
  double m_svd_value = 0.0;
  double d_svd_value = 0.0;
  Vector singular_values;
  double m_cca_value = 0.0;
  int n_samples = 0;
};
Json similarity_report_to_json(const SimilarityReport& report);

Json dataset_to_json(const AngularDataset& data);
AngularDataset dataset_from_json(const Json& j);

Json checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const Json& j);

void write_json(const Json& j, const std::string& path);
Json read_json(const std::string& path);

/// CSV emitter with a fixed column order and a schema-version header line
/// ("# repsim.<name>/1"). Values are written with round-trippable precision
/// so identical runs produce identical bytes.
class CsvWriter {
 public:
  CsvWriter(std::string name, std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& cells);
  std::string str() const;
  void save(const std::string& path) const;
  static std::string format(double v);

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// CondLogProb as CSV: one row per input (id, weight, then one column per
/// label id).
std::string cond_log_prob_csv(const CondLogProb& dist, const ModelTable& model);

}  // namespace repsim
