#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deft/core/grad_check.hpp"

namespace deft {

struct GradCheckCase {
  std::string scope;  // op, block or model
  std::string name;
  double tolerance = 0.0;
  GradCheckResult result;
  bool passed() const { return result.max_rel_error < tolerance; }
};

// Scope "op" covers every differentiable tensor op (tolerance 1e-5), "block"
// the model building blocks (1e-4), "model" the tiny full model (1e-3) with a
// subsample of elements per parameter. "all" runs the three in turn.
std::vector<GradCheckCase> run_gradcheck_suite(const std::string& scope, std::uint64_t seed = 1);

// Names of the op-scope cases, each naming the op it exercises.
std::vector<std::string> gradcheck_op_names();

}  // namespace deft
