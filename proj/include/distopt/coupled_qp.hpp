#pragma once

#include "distopt/types.hpp"

#include <vector>

namespace distopt {

/// Solves [H E'; E 0] [z; w] = rhs with a full-pivoting LU and one step of
/// iterative refinement. Throws kSingular naming the rank defect.
Vector solve_kkt(const Matrix& h_block, const Matrix& equality_rows, const Vector& rhs);

struct AladinQpBlock {
  Matrix hessian;        // H_i, symmetric positive definite
  Vector gradient;       // g_i
  Matrix active_jacobian;  // C_i, one row per active constraint
  Matrix coupling;       // A_i
  Vector point;          // y_i
};

struct AladinQpData {
  std::vector<AladinQpBlock> blocks;
  Vector lambda;
  double mu = 1e3;
  Vector b;
};

struct CoupledQpSolution {
  std::vector<Vector> dy;
  Vector slack;
  Vector lambda_qp;
  /// Multipliers of C_i dy_i = 0, one per input row; rows removed as
  /// linearly dependent carry zero.
  std::vector<Vector> kappa_qp;
  /// Rows of each C_i kept after the rank filter.
  std::vector<std::vector<Index>> kept_rows;
};

///   min sum 0.5 dy_i'H_i dy_i + g_i'dy_i + lambda's + mu/2 ||s||^2
///   s.t. sum A_i (y_i + dy_i) = b + s   | lambda_qp
///        C_i dy_i = 0                   | kappa_qp
CoupledQpSolution solve_aladin_qp(const AladinQpData& data);

/// Row indices of a linearly independent subset of the rows of c, chosen by a
/// column-pivoted QR of c' with relative threshold `threshold`.
std::vector<Index> independent_rows(const Matrix& c, double threshold = 1e-10);

/// Coordinator QP of ADMM:
///   min sum rho/2 ||A_i (y_i - x_i)||^2 - <A_i x_i, lambda_i>  s.t. sum A_i x_i = b
/// solved for d_i = x_i - y_i with a 1e-10 * I Tikhonov term, which anchors
/// the components of x_i in null(A_i) at y_i.
std::vector<Vector> solve_admm_qp(const std::vector<Matrix>& coupling, const std::vector<Vector>& y,
                                  const std::vector<Vector>& lambda_plus, double rho, const Vector& b);

}  // namespace distopt
