#pragma once

#include "distopt/comms.hpp"
#include "distopt/problem.hpp"
#include "distopt/trace.hpp"

namespace distopt {

struct AdmmParams {
  double rho = 1.0;
  double epsilon = 1e-6;
  int max_iterations = 500;
  double local_tolerance = 1e-10;
  bool parallel = false;
};

void validate(const AdmmParams& params);

struct AdmmState {
  std::vector<Vector> x;
  std::vector<Vector> lambda;
  std::vector<Vector> y;
  std::vector<Vector> kappa;
  int iteration = 0;
  double residual_l1 = kInf;
  bool terminal = false;
};

/// x from `initial` (zeros when empty), lambda_i = 0, y = x.
AdmmState admm_initial_state(const PartiallySeparableProblem& problem, const Vector& initial = {});

/// One pass of local solves, termination check, dual step lambda_i += rho A_i (y_i - x_i),
/// coordinator QP and broadcast. On termination x is set to y and the dual and
/// QP steps are skipped. Local failures throw with subsystem and iteration.
AdmmState admm_iterate(const AdmmState& state, const PartiallySeparableProblem& problem,
                       const AdmmParams& params, CommLedger* ledger = nullptr);

struct AdmmResult {
  Vector x;
  std::vector<Vector> lambda;
  double objective = 0.0;
  double residual_l1 = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kMaxIterations;
  Trace trace;
};

AdmmResult admm_solve(const PartiallySeparableProblem& problem, const Vector& initial,
                      const AdmmParams& params = {}, CommLedger* ledger = nullptr);

}  // namespace distopt
