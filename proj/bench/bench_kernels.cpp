// Wall-time comparison of the OpenMP kernels against the serial reference
// implementations. Not a correctness test (tests/parallel_consistency.cpp
// covers that); this just shows the speedup on a realistic workload.

#include <chrono>
#include <cstdio>
#include <functional>

#include "repsim/constructions.hpp"
#include "repsim/distributional.hpp"
#include "repsim/rng.hpp"
#include "repsim/serial_ref.hpp"

using namespace repsim;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  // warm-up
  fn();
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

ModelTable random_model(int n, int k, int M, std::uint64_t seed) {
  Rng rng(seed);
  ModelTable m;
  m.embeddings.resize(n, M);
  m.unembeddings.resize(k, M);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < M; ++c) m.embeddings(i, c) = rng.normal();
  for (int j = 0; j < k; ++j)
    for (int c = 0; c < M; ++c) m.unembeddings(j, c) = rng.normal();
  m.input_ids = ModelTable::default_ids("x", n);
  m.label_ids = ModelTable::default_ids("y", k);
  return m;
}

}  // namespace

int main() {
  const int n = 20000, k = 16, M = 8;
  const ModelTable a = random_model(n, k, M, 1);
  const ModelTable b = random_model(n, k, M, 2);
  const Vector w = uniform_weights(n);

  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial (ms)", "openmp (ms)", "speedup");

  const double t_clp_ser = time_ms([&] { serial_ref::cond_log_probs(a, w); }, 5);
  const double t_clp_omp = time_ms([&] { cond_log_probs(a, w); }, 5);
  std::printf("%-28s %12.2f %12.2f %8.2fx\n", "cond_log_probs 20000x16", t_clp_ser, t_clp_omp,
              t_clp_ser / t_clp_omp);

  const CondLogProb pa = cond_log_probs(a, w);
  const CondLogProb pb = cond_log_probs(b, w);
  const double t_kl_ser = time_ms([&] { serial_ref::d_kl(pa, pb); }, 10);
  const double t_kl_omp = time_ms([&] { d_kl(pa, pb); }, 10);
  std::printf("%-28s %12.2f %12.2f %8.2fx\n", "d_kl 20000x16", t_kl_ser, t_kl_omp,
              t_kl_ser / t_kl_omp);

  // pivot search dominates pairwise comparisons in practice
  ModelPair pair = ModelPair::make(a, b, w);
  PivotSearchOptions opts;
  opts.n_input_sets = 200;
  const double t_sel = time_ms([&] { select_pivots(pair, opts); }, 3);
  std::printf("%-28s %12s %12.2f\n", "select_pivots (omp)", "-", t_sel);

  return 0;
}
