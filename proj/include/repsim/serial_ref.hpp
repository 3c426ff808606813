#pragma once

#include "repsim/distributional.hpp"
#include "repsim/model.hpp"

namespace repsim::serial_ref {

// Straight-line serial implementations of the parallel kernels, kept as the
// reference the OpenMP paths are tested against. Summation order inside one
// row/item matches the parallel kernels, so results are bitwise identical.

CondLogProb cond_log_probs(const ModelTable& model, const Vector& weights);
double d_kl(const CondLogProb& p, const CondLogProb& q);
PsiTerms psi_terms(const CondLogProb& p, const PivotConfig& pivots, double psi_floor = 1e-12);

}  // namespace repsim::serial_ref
