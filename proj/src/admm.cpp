#include "distopt/admm.hpp"

#include "distopt/coupled_qp.hpp"
#include "distopt/local_nlp.hpp"
#include "parallel.hpp"

namespace distopt {

void validate(const AdmmParams& params) {
  if (!(params.rho > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ADMM needs rho > 0");
  if (!(params.epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ADMM needs epsilon > 0");
  if (params.max_iterations <= 0) throw Error(ErrorCode::kInvalidArgument, "ADMM needs max_iter > 0");
}

AdmmState admm_initial_state(const PartiallySeparableProblem& problem, const Vector& initial) {
  require_consistent(problem);
  const Vector x0 = initial.size() > 0 ? initial : Vector(Vector::Zero(problem.total_dim()));
  AdmmState s;
  s.x = problem.split(x0);
  s.y = s.x;
  s.lambda.assign(problem.subsystems.size(), Vector::Zero(problem.coupling_rows()));
  s.kappa.resize(problem.subsystems.size());
  return s;
}

AdmmState admm_iterate(const AdmmState& state, const PartiallySeparableProblem& problem,
                       const AdmmParams& params, CommLedger* ledger) {
  validate(params);
  const std::size_t count = problem.subsystems.size();
  if (state.x.size() != count || state.lambda.size() != count) {
    throw Error(ErrorCode::kDimensionMismatch, "ADMM state does not match the problem");
  }
  AdmmState next = state;
  const int it = state.iteration;

  std::vector<LocalSolution> local(count);
  detail::for_each_subsystem(count, params.parallel, [&](std::size_t i) {
    LocalSolveSpec spec;
    spec.subsystem = &problem.subsystems[i];
    spec.anchor = state.x[i];
    spec.lambda = state.lambda[i];
    spec.rho = params.rho;
    spec.tolerance = params.local_tolerance;
    spec.start = state.y[i].size() == state.x[i].size() ? state.y[i] : state.x[i];
    spec.warm_multipliers = state.kappa[i];
    local[i] = solve_admm_subproblem(spec);
  });
  for (std::size_t i = 0; i < count; ++i) {
    const LocalSolution& sol = local[i];
    if (sol.status == LocalStatus::kInfeasible ||
        (sol.status != LocalStatus::kConverged && !(sol.kkt_residual <= 1e-6))) {
      throw Error(sol.status == LocalStatus::kInfeasible ? ErrorCode::kInfeasible : ErrorCode::kSolverFailure,
                  "local solve of subsystem " + std::to_string(i) + " failed at iteration " +
                      std::to_string(it) + " (" + to_string(sol.status) + ")")
          .with_subsystem(static_cast<Index>(i))
          .with_iteration(it)
          .with_last_iterate(sol.y);
    }
    next.y[i] = sol.y;
    next.kappa[i] = sol.kappa;
    if (ledger) {
      ledger->record({static_cast<int>(i), kCentralEntity, MessageKind::kLocalSolution, sol.y.size(), it});
    }
  }

  next.residual_l1 = coupling_residual(problem, next.y).lpNorm<1>();
  next.iteration = it + 1;
  if (next.residual_l1 <= params.epsilon) {
    next.x = next.y;
    next.terminal = true;
    if (ledger) ledger->mark_terminal(it);
    return next;
  }

  std::vector<Matrix> coupling(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Matrix& a = problem.subsystems[i].coupling;
    next.lambda[i] = state.lambda[i] + params.rho * (a * (next.y[i] - state.x[i]));
    coupling[i] = a;
  }
  try {
    next.x = solve_admm_qp(coupling, next.y, next.lambda, params.rho, problem.b);
  } catch (Error& e) {
    throw e.with_iteration(it);
  }
  if (ledger) {
    for (std::size_t i = 0; i < count; ++i) {
      ledger->record({kCentralEntity, static_cast<int>(i), MessageKind::kQpResult, next.x[i].size(), it});
    }
  }
  return next;
}

AdmmResult admm_solve(const PartiallySeparableProblem& problem, const Vector& initial, const AdmmParams& params,
                      CommLedger* ledger) {
  validate(params);
  AdmmState state = admm_initial_state(problem, initial);
  AdmmResult result;
  while (state.iteration < params.max_iterations) {
    state = admm_iterate(state, problem, params, ledger);
    IterationRecord rec;
    rec.iteration = state.iteration - 1;
    rec.residual_l1 = state.residual_l1;
    rec.objective = evaluate_total_objective(problem, state.y);
    rec.terminal = state.terminal;
    result.trace.push_back(rec);
    if (state.terminal) break;
  }
  result.status = state.terminal ? SolveStatus::kConverged : SolveStatus::kMaxIterations;
  result.x = problem.join(state.x);
  result.lambda = state.lambda;
  result.objective = evaluate_total_objective(problem, state.x);
  result.residual_l1 = coupling_residual(problem, state.x).lpNorm<1>();
  result.iterations = state.iteration;
  return result;
}

}  // namespace distopt
