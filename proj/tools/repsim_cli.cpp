// Command-line front end: constructs the model families, runs the sweeps,
// and emits machine-readable CSV/JSON. Thread count is controlled by
// OMP_NUM_THREADS only.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

#include "repsim/experiments.hpp"
#include "repsim/version.hpp"

namespace {

using namespace repsim;

int run(int argc, char** argv) {
  CLI::App app{"distances between softmax-model distributions and their representations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Table1Config table1;
  auto* cmd_table1 = app.add_subcommand(
      "table1", "rho sweep of the permuted-cluster pair (d_KL, d_LLV, m_CCA, max d_SVD)");
  cmd_table1->add_option("--rho", table1.rho_values, "rho grid")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd_table1->add_option("--seed", table1.seed, "construction seed");
  cmd_table1->add_option("--lambda", table1.lambda, "weighting constant")->check(CLI::PositiveNumber);
  cmd_table1->add_option("--out", table1.out_path, "output CSV path")->required();

  BoundSweepConfig bound;
  auto* cmd_bound = app.add_subcommand(
      "bound-sweep", "noise-perturbation sweep with a bound certificate per point");
  cmd_bound->add_option("--sigmas", bound.sigmas, "noise levels")->delimiter(',');
  cmd_bound->add_option("--seed", bound.seed, "construction seed");
  cmd_bound->add_option("--lambda", bound.lambda, "weighting constant")->check(CLI::PositiveNumber);
  cmd_bound->add_option("--out", bound.out_path, "output CSV path")->required();

  WidthSweepConfig width;
  std::string profile = "ci";
  auto* cmd_width = app.add_subcommand(
      "width-sweep", "train MLPs across widths and report pairwise distance statistics");
  cmd_width->add_option("--classes", width.n_classes, "class count (even)");
  cmd_width->add_option("--profile", profile, "ci or full")
      ->check(CLI::IsMember({"ci", "full"}));
  cmd_width->add_option("--widths", width.widths, "width list (overrides the profile)")
      ->delimiter(',');
  cmd_width->add_option("--seeds", width.n_seeds, "seeds per width (overrides the profile)");
  cmd_width->add_option("--steps", width.steps, "training steps (overrides the profile)");
  cmd_width->add_option("--data-seed", width.data_seed, "dataset seed");
  cmd_width->add_option("--lambda", width.lambda, "weighting constant")->check(CLI::PositiveNumber);
  cmd_width->add_option("--out", width.out_path, "output CSV path")->required();

  CompareConfig compare;
  auto* cmd_compare = app.add_subcommand("compare", "full comparison report for two model files");
  cmd_compare->add_option("--model-a", compare.model_a_path, "first model JSON")->required();
  cmd_compare->add_option("--model-b", compare.model_b_path, "second model JSON")->required();
  cmd_compare->add_option("--lambda", compare.lambda, "weighting constant")
      ->check(CLI::PositiveNumber);
  cmd_compare->add_option("--input-sets", compare.n_input_sets, "candidate input sets");
  cmd_compare->add_option("--seed", compare.seed, "pivot search seed");
  cmd_compare->add_option("--out", compare.out_path, "output JSON path")->required();

  GenDataConfig gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "sample the angular-slice dataset");
  cmd_gen->add_option("--classes", gen.n_classes, "class count (even)");
  cmd_gen->add_option("--n", gen.n, "sample count");
  cmd_gen->add_option("--sigma", gen.sigma, "Gaussian scale")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--seed", gen.seed, "sampling seed");
  cmd_gen->add_option("--out", gen.out_path, "output JSON path")->required();

  TrainCliConfig tr;
  auto* cmd_train = app.add_subcommand("train", "train one classifier on a dataset file");
  cmd_train->add_option("--data", tr.data_path, "dataset JSON")->required();
  cmd_train->add_option("--width", tr.width, "hidden width");
  cmd_train->add_option("--steps", tr.steps, "training steps");
  cmd_train->add_option("--lr", tr.lr, "learning rate");
  cmd_train->add_option("--constraint", tr.constraint, "none, emb20, unemb20 or both20")
      ->check(CLI::IsMember({"none", "emb20", "unemb20", "both20"}));
  cmd_train->add_option("--seed", tr.seed, "training seed");
  cmd_train->add_option("--out", tr.out_path, "checkpoint JSON path")->required();
  cmd_train->add_option("--table-out", tr.table_out_path,
                        "also export the model table on the held-out grid");

  CLI11_PARSE(app, argc, argv);

  if (cmd_table1->parsed()) {
    const auto records = run_table1(table1);
    std::printf("table1: %zu rows -> %s\n", records.size(), table1.out_path.c_str());
  } else if (cmd_bound->parsed()) {
    const auto records = run_bound_sweep(bound);
    int held = 0;
    for (const auto& r : records) held += r.cert.holds;
    std::printf("bound-sweep: %d/%zu certificates hold -> %s\n", held, records.size(),
                bound.out_path.c_str());
  } else if (cmd_width->parsed()) {
    width.profile = profile_from_string(profile);
    const auto rows = run_width_sweep(width);
    std::printf("width-sweep: %zu width rows -> %s\n", rows.size(), width.out_path.c_str());
  } else if (cmd_compare->parsed()) {
    run_compare(compare);
    std::printf("compare: report -> %s\n", compare.out_path.c_str());
  } else if (cmd_gen->parsed()) {
    const auto data = run_gen_data(gen);
    std::printf("gen-data: %d samples, %d classes -> %s\n",
                static_cast<int>(data.points.rows()), data.n_classes, gen.out_path.c_str());
  } else if (cmd_train->parsed()) {
    const auto model = run_train(tr);
    std::printf("train: accuracy %.4f -> %s\n", model.final_accuracy, tr.out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
