#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repsim/constructions.hpp"
#include "repsim/io.hpp"
#include "repsim/train.hpp"

namespace repsim {

// Experiment drivers behind the CLI subcommands. Each one is deterministic
// given its config and writes byte-stable output files.

enum class Profile { kCi, kFull };
Profile profile_from_string(const std::string& s);

struct Table1Config {
  std::vector<double> rho_values{3.0, 6.0, 9.0, 12.0, 15.0, 18.0};
  std::uint64_t seed = 7;
  double lambda = kDefaultLambda;
  std::string out_path;
};
std::vector<RhoSweepRecord> run_table1(const Table1Config& config);

struct BoundSweepConfig {
  std::vector<double> sigmas{0.0, 0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12};
  std::uint64_t seed = 5;
  double lambda = kDefaultLambda;
  std::string out_path;
};
struct BoundSweepRecord {
  double sigma = 0.0;
  BoundCertificate cert;
};
std::vector<BoundSweepRecord> run_bound_sweep(const BoundSweepConfig& config);

struct WidthSweepConfig {
  int n_classes = 4;
  Profile profile = Profile::kCi;
  std::vector<int> widths;  // empty -> profile default
  int n_seeds = 0;          // 0 -> profile default
  int steps = 0;            // 0 -> profile default
  std::uint64_t data_seed = 0;
  double lambda = kDefaultLambda;
  std::string out_path;
};
std::vector<WidthSweepRow> run_width_sweep(const WidthSweepConfig& config);
WidthSweepOptions resolve_width_options(const WidthSweepConfig& config);

struct CompareConfig {
  std::string model_a_path;
  std::string model_b_path;
  double lambda = kDefaultLambda;
  int n_input_sets = 200;
  std::uint64_t seed = 0;
  std::string out_path;
};
Json run_compare(const CompareConfig& config);
/// Compare two in-memory models on a shared grid; the JSON bundle carries
/// the distance report, the similarity report, and the bound certificate.
Json compare_models(const ModelTable& a, const ModelTable& b, const Vector& weights,
                    double lambda, int n_input_sets, std::uint64_t seed);

struct GenDataConfig {
  int n_classes = 4;
  int n = 20000;
  double sigma = 3.0;
  std::uint64_t seed = 0;
  std::string out_path;
};
AngularDataset run_gen_data(const GenDataConfig& config);

struct TrainCliConfig {
  std::string data_path;
  int width = 64;
  int steps = 15000;
  double lr = 1e-3;
  std::string constraint = "none";
  std::uint64_t seed = 0;
  std::string out_path;        // checkpoint json
  std::string table_out_path;  // optional: model table on the held-out grid
};
TrainedModel run_train(const TrainCliConfig& config);

std::string table1_csv(const std::vector<RhoSweepRecord>& records);
std::string bound_sweep_csv(const std::vector<BoundSweepRecord>& records);
std::string width_sweep_csv(const std::vector<WidthSweepRow>& rows);

}  // namespace repsim
