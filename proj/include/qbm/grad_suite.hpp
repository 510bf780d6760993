#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qbm/model.hpp"

namespace qbm {

struct GradSuiteRow {
  std::string name;
  double max_rel_err = 0.0;
};

// Small-model configuration used for gradient verification.
ModelConfig grad_check_config();

// Finite-difference verification of every differentiable operation and of the
// full model forward, in 64-bit mode, at `points` seeded random points per
// check. Returns the per-check maximum relative error.
std::vector<GradSuiteRow> run_grad_suite(uint64_t seed, int points);

}  // namespace qbm
