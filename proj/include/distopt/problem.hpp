#pragma once

#include "distopt/error.hpp"
#include "distopt/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace distopt {

/// Twice differentiable scalar function. The gradient is mandatory; when no
/// Hessian is supplied, central differences of the gradient are used with step
/// 1e-6 * (1 + |x_j|).
struct SmoothFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;

  Matrix hessian_at(const Vector& x) const;

  /// 0.5 x'Qx + c'x + offset.
  static SmoothFunction quadratic(Matrix q, Vector c, double offset = 0.0);
  static SmoothFunction zero(Index dim);
};

/// Vector-valued constraint map c(x) with Jacobian. `weighted_hessian(x, w)`
/// returns sum_j w_j * Hess c_j(x); it falls back to central differences of J'w.
struct ConstraintFunction {
  Index count = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
  std::function<Matrix(const Vector&, const Vector&)> weighted_hessian;

  Vector value_at(const Vector& x) const;
  Matrix jacobian_at(const Vector& x) const;
  Matrix weighted_hessian_at(const Vector& x, const Vector& weights) const;

  static ConstraintFunction none();
  /// Rows D x - d (so D x <= d reads value <= 0). Zero curvature.
  static ConstraintFunction linear(Matrix d_matrix, Vector d_vector);
  /// Stacks several constraint maps over the same variable.
  static ConstraintFunction stack(std::vector<ConstraintFunction> parts);
};

/// One block of a partially separable problem: local cost k_i, local
/// inequalities h_i(x_i) <= 0 and coupling matrix A_i (m x n_i).
struct Subsystem {
  Index id = 0;
  Index dim = 0;
  SmoothFunction objective;
  ConstraintFunction inequalities;
  Matrix coupling;
  std::string name;
};

/// min sum_i k_i(x_i)  s.t.  h_i(x_i) <= 0,  sum_i A_i x_i = b.
struct PartiallySeparableProblem {
  std::vector<Subsystem> subsystems;
  Vector b;

  Index coupling_rows() const { return b.size(); }
  Index num_subsystems() const { return static_cast<Index>(subsystems.size()); }
  Index total_dim() const;
  std::vector<Index> dims() const;
  std::vector<Index> offsets() const;

  std::vector<Vector> split(const Vector& x) const;
  Vector join(const std::vector<Vector>& parts) const;
};

struct PrimalDualPoint {
  Vector x;
  Vector lambda;
  std::vector<Vector> per_subsystem_lambda;
};

/// sum_i A_i x_i - b. Throws kDimensionMismatch naming the offending subsystem.
Vector coupling_residual(const PartiallySeparableProblem& problem, const Vector& x);
Vector coupling_residual(const PartiallySeparableProblem& problem, const std::vector<Vector>& parts);

double evaluate_total_objective(const PartiallySeparableProblem& problem, const Vector& x);
double evaluate_total_objective(const PartiallySeparableProblem& problem,
                                const std::vector<Vector>& parts);

struct Finding {
  std::optional<Index> subsystem;
  std::string message;
};

struct DiagnosticReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
  std::string to_string() const;
};

/// Reports dimension inconsistencies, asymmetric Hessians and non-finite
/// evaluations at the probe point (origin when `probe` is empty).
DiagnosticReport validate_problem(const PartiallySeparableProblem& problem, const Vector& probe = {});

/// Throws kDimensionMismatch with the first structural finding, if any.
void require_consistent(const PartiallySeparableProblem& problem);

}  // namespace distopt
