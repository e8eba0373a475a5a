#pragma once

#include "distopt/types.hpp"

#include <string>
#include <vector>

namespace distopt {

enum class SolveStatus { kConverged, kMaxIterations };

inline const char* to_string(SolveStatus s) { return s == SolveStatus::kConverged ? "converged" : "max_iter"; }

/// One row of an outer-loop trace. Fields an algorithm does not use stay 0.
struct IterationRecord {
  int iteration = 0;
  double residual_l1 = 0.0;   // ||sum A_i y_i - b||_1
  double proximal_l1 = 0.0;   // sum ||Sigma_i (y_i - x_i)||_1 (ALADIN)
  double objective = 0.0;     // sum k_i(y_i)
  double slack_norm = 0.0;
  double step_norm = 0.0;
  double mu = 0.0;
  bool fallback = false;
  bool terminal = false;
};

using Trace = std::vector<IterationRecord>;

}  // namespace distopt
