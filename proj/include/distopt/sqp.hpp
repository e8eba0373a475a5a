#pragma once

#include "distopt/problem.hpp"

namespace distopt {

/// min f(x)  s.t.  h(x) <= 0,  e(x) = 0.
struct NlpProblem {
  Index dim = 0;
  SmoothFunction objective;
  ConstraintFunction inequalities;
  ConstraintFunction equalities;
};

struct SqpOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
  double armijo = 1e-4;
  double backtrack = 0.5;
  /// Warm-start multipliers; used for the first Hessian when sizes match.
  Vector initial_ineq_multipliers;
  Vector initial_eq_multipliers;
};

enum class SqpStatus { kConverged, kMaxIterations, kLineSearchFailure, kInfeasible };

const char* to_string(SqpStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max({stationarity, primal, complementarity}); }
};

/// Multipliers follow L = f + kappa'h + nu'e with kappa >= 0.
struct SqpResult {
  Vector x;
  Vector ineq_multipliers;
  Vector eq_multipliers;
  SqpStatus status = SqpStatus::kMaxIterations;
  int iterations = 0;
  double kkt_residual = kInf;
  KktResiduals residuals;
};

/// Line-search SQP on an L1 merit function. Each iteration solves a dense QP
/// with the Lagrangian Hessian made positive definite (first through the
/// active-constraint augmentation B + c J_a'J_a, then by adding tau*I with tau
/// doubling from 1e-8). Restores feasibility by minimizing sum max(h,0)^2 +
/// sum e^2 when a linearization is inconsistent.
SqpResult sqp_solve(const NlpProblem& nlp, const Vector& start, const SqpOptions& options = {});

KktResiduals nlp_kkt_residuals(const NlpProblem& nlp, const Vector& x, const Vector& kappa,
                               const Vector& nu);

/// Smallest eigenvalue floor used to convexify Hessians; returns the shifted
/// matrix B + tau*I with tau the first of 1e-8, 2e-8, ... reaching the floor.
Matrix regularize_by_shift(const Matrix& b, double floor = 1e-8);

}  // namespace distopt
