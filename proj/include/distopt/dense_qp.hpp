#pragma once

#include "distopt/types.hpp"

namespace distopt {

/// min 0.5 x'Gx + c'x  s.t.  E x = f,  I x <= u.   G must be positive definite.
struct DenseQp {
  Matrix hessian;
  Vector linear;
  Matrix eq_matrix;
  Vector eq_rhs;
  Matrix ineq_matrix;
  Vector ineq_rhs;
};

enum class QpStatus { kOptimal, kInfeasible, kNotConvex, kIterationLimit };

/// Multipliers follow L = 0.5 x'Gx + c'x + nu'(Ex - f) + kappa'(Ix - u), kappa >= 0.
struct DenseQpSolution {
  Vector x;
  Vector eq_multipliers;
  Vector ineq_multipliers;
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
};

/// Goldfarb-Idnani dual active-set method. Starts from the unconstrained
/// minimizer and adds violated constraints one at a time, so no feasible
/// starting point is required and infeasibility is detected on the way.
DenseQpSolution solve_dense_qp(const DenseQp& qp);

}  // namespace distopt
