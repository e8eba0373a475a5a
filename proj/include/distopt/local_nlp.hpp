#pragma once

#include "distopt/problem.hpp"
#include "distopt/sqp.hpp"

#include <optional>

namespace distopt {

/// Data of one decoupled subproblem
///   min k_i(y) + <A_i y, lambda> + prox(y)  s.t.  h_i(y) <= 0
/// with prox = rho/2 ||A_i (y - x_i)||^2 (ADMM, no scaling) or
/// rho/2 ||y - x_i||^2_{Sigma_i} (ALADIN).
struct LocalSolveSpec {
  const Subsystem* subsystem = nullptr;
  Vector anchor;
  Vector lambda;
  double rho = 0.0;
  std::optional<Matrix> scaling;
  double tolerance = 1e-10;
  int max_iterations = 200;
  /// Starting point for the local solver; the anchor when empty.
  Vector start;
  Vector warm_multipliers;
};

enum class LocalStatus { kConverged, kMaxIterations, kInfeasible };

const char* to_string(LocalStatus status);

struct LocalSolution {
  Vector y;
  Vector kappa;
  LocalStatus status = LocalStatus::kMaxIterations;
  double kkt_residual = kInf;
  int iterations = 0;
};

LocalSolution solve_admm_subproblem(const LocalSolveSpec& spec);
LocalSolution solve_aladin_subproblem(const LocalSolveSpec& spec);

/// Split of the local objective value into its three additive parts.
struct LocalObjectiveTerms {
  double cost = 0.0;
  double multiplier = 0.0;
  double proximal = 0.0;
  double total() const { return cost + multiplier + proximal; }
};

LocalObjectiveTerms local_objective_terms(const LocalSolveSpec& spec, const Vector& y);

/// The decoupled NLP as a generic problem for `sqp_solve`.
NlpProblem local_nlp(const LocalSolveSpec& spec);

/// Indices j with |h_j| <= activity_tol.
std::vector<Index> detect_active_set(const Vector& h_values, const Vector& kappa, double activity_tol);

/// Default activity band 1e-8 * (1 + ||h||_inf).
double default_activity_tolerance(const Vector& h_values, double base = 1e-8);

}  // namespace distopt
