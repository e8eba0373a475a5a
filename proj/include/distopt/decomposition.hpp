#pragma once

#include "distopt/problem.hpp"

namespace distopt {

/// Cost k(w, z) of one block of a two-block primal decomposition, as a smooth
/// function of the stacked variable [w; z] with w local and z shared.
struct BlockCost {
  Index local_dim = 0;
  Index shared_dim = 0;
  SmoothFunction cost;
};

struct PrimalDecompositionOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  double inner_tolerance = 1e-12;
};

struct PrimalDecompositionResult {
  Vector x;
  Vector y;
  Vector z;
  double value = 0.0;
  int iterations = 0;
};

/// min_z k1*(z) + k2*(z) with k1*(z) = min_x k1(x, z) and k2*(z) = min_y k2(y, z).
/// Newton's method on the master problem, using the envelope gradient and the
/// Schur complement of each inner Hessian. Inner failures throw with the last
/// master iterate attached.
PrimalDecompositionResult primal_decomposition_solve(const BlockCost& k1, const BlockCost& k2,
                                                     const PrimalDecompositionOptions& options = {});

struct DualAscentOptions {
  double step_size = 0.1;
  int max_iterations = 2000;
  double tolerance = 1e-9;
};

struct DualAscentResult {
  Vector z1;
  Vector z2;
  Vector lambda;
  double dual_value = 0.0;
  double consensus_gap = 0.0;
  bool gap_flagged = false;
  int iterations = 0;
};

/// Gradient ascent on D(lambda) = min k1(z1) + k2(z2) + lambda'(z1 - z2).
/// The step halves whenever the dual value would decrease.
DualAscentResult dual_ascent_solve(const SmoothFunction& k1, const SmoothFunction& k2, Index dim,
                                   const DualAscentOptions& options = {});

}  // namespace distopt
