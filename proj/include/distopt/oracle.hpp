#pragma once

#include "distopt/problem.hpp"
#include "distopt/sqp.hpp"

#include <cstdint>
#include <functional>

namespace distopt {

/// KKT residuals of min sum k_i s.t. h_i <= 0, sum A_i x_i = b, under the
/// Lagrangian sum k_i + lambda'(sum A_i x_i - b) + sum kappa_i'h_i.
struct KktReport {
  /// max |grad k_i + A_i'lambda + J_i'kappa_i| over all subsystems.
  double stationarity = 0.0;
  /// ||sum A_i x_i - b||_1 + max(0, max_j h_j).
  double primal = 0.0;
  /// max |kappa_j h_j|.
  double complementarity = 0.0;
  /// Magnitude of the most negative multiplier (0 when kappa >= 0).
  double dual_feasibility = 0.0;

  double max() const;
  bool passes(double tol) const { return max() <= tol; }
};

KktReport kkt_check(const PartiallySeparableProblem& problem, const Vector& x, const Vector& lambda,
                    const std::vector<Vector>& kappa);

struct OracleOptions {
  double tolerance = 1e-10;
  int max_iterations = 500;
  /// Additional randomly perturbed starts; the best converged point wins.
  int multistart = 0;
  double perturbation = 0.05;
  std::uint64_t seed = 1;
};

struct OracleResult {
  Vector x;
  std::vector<Vector> parts;
  Vector lambda;
  std::vector<Vector> kappa;
  double objective = 0.0;
  SqpStatus status = SqpStatus::kMaxIterations;
  int iterations = 0;
  KktReport report;
};

/// The stacked problem with the coupling as equality constraints. The result
/// refers to `problem`, which must outlive it.
NlpProblem stacked_nlp(const PartiallySeparableProblem& problem);

/// Solves the problem monolithically. Never throws on nonconvergence: the best
/// iterate is returned with its report. `initial` defaults to the origin.
OracleResult centralized_solve(const PartiallySeparableProblem& problem, const Vector& initial = {},
                               const OracleOptions& options = {});

/// Central-difference gradient with per-coordinate step `step * (1 + |x_j|)`.
Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x, double step = 1e-6);

/// Central-difference Jacobian of a vector map.
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                                  double step = 1e-6);

}  // namespace distopt
