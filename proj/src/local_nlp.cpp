#include "distopt/local_nlp.hpp"

#include <cmath>

namespace distopt {

const char* to_string(LocalStatus status) {
  switch (status) {
    case LocalStatus::kConverged: return "converged";
    case LocalStatus::kMaxIterations: return "max_iter";
    case LocalStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

void check_spec(const LocalSolveSpec& spec) {
  if (spec.subsystem == nullptr) throw Error(ErrorCode::kInvalidArgument, "local solve without subsystem");
  const Subsystem& s = *spec.subsystem;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kDimensionMismatch, "subsystem " + std::to_string(s.id) + ": " + what)
        .with_subsystem(s.id);
  };
  if (spec.anchor.size() != s.dim) fail("anchor has wrong length");
  if (spec.lambda.size() != s.coupling.rows()) fail("multiplier has wrong length");
  if (s.coupling.cols() != s.dim) fail("coupling matrix has wrong column count");
  if (spec.rho < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "penalty rho must be nonnegative").with_subsystem(s.id);
  }
  if (spec.scaling && (spec.scaling->rows() != s.dim || spec.scaling->cols() != s.dim)) {
    fail("scaling matrix has wrong shape");
  }
  if (spec.start.size() != 0 && spec.start.size() != s.dim) fail("start has wrong length");
}

// Quadratic weight of the proximal term: A'A (ADMM) or Sigma (ALADIN).
Matrix proximal_weight(const LocalSolveSpec& spec) {
  const Subsystem& s = *spec.subsystem;
  if (spec.scaling) return *spec.scaling;
  return s.coupling.transpose() * s.coupling;
}

LocalSolution run(const LocalSolveSpec& spec) {
  const NlpProblem nlp = local_nlp(spec);
  SqpOptions opts;
  opts.tolerance = spec.tolerance;
  opts.max_iterations = spec.max_iterations;
  opts.initial_ineq_multipliers = spec.warm_multipliers;
  const Vector& start = spec.start.size() > 0 ? spec.start : spec.anchor;
  const SqpResult r = sqp_solve(nlp, start, opts);
  LocalSolution sol;
  sol.y = r.x;
  sol.kappa = r.ineq_multipliers;
  sol.kkt_residual = r.kkt_residual;
  sol.iterations = r.iterations;
  switch (r.status) {
    case SqpStatus::kConverged: sol.status = LocalStatus::kConverged; break;
    case SqpStatus::kInfeasible: sol.status = LocalStatus::kInfeasible; break;
    default: sol.status = LocalStatus::kMaxIterations; break;
  }
  return sol;
}

}  // namespace

NlpProblem local_nlp(const LocalSolveSpec& spec) {
  check_spec(spec);
  const Subsystem& s = *spec.subsystem;
  const Matrix weight = spec.rho * proximal_weight(spec);
  const Vector linear = s.coupling.transpose() * spec.lambda;
  const Vector anchor = spec.anchor;
  const SmoothFunction cost = s.objective;

  NlpProblem nlp;
  nlp.dim = s.dim;
  nlp.objective.value = [cost, weight, linear, anchor](const Vector& y) {
    const Vector dy = y - anchor;
    return cost.value(y) + linear.dot(y) + 0.5 * dy.dot(weight * dy);
  };
  nlp.objective.gradient = [cost, weight, linear, anchor](const Vector& y) -> Vector {
    return cost.gradient(y) + linear + weight * (y - anchor);
  };
  nlp.objective.hessian = [cost, weight](const Vector& y) -> Matrix { return cost.hessian_at(y) + weight; };
  nlp.inequalities = s.inequalities;
  nlp.equalities = ConstraintFunction::none();
  return nlp;
}

LocalObjectiveTerms local_objective_terms(const LocalSolveSpec& spec, const Vector& y) {
  check_spec(spec);
  const Subsystem& s = *spec.subsystem;
  LocalObjectiveTerms t;
  t.cost = s.objective.value(y);
  t.multiplier = (s.coupling * y).dot(spec.lambda);
  const Vector dy = y - spec.anchor;
  t.proximal = 0.5 * spec.rho * dy.dot(proximal_weight(spec) * dy);
  return t;
}

LocalSolution solve_admm_subproblem(const LocalSolveSpec& spec) {
  LocalSolveSpec admm = spec;
  admm.scaling.reset();
  return run(admm);
}

LocalSolution solve_aladin_subproblem(const LocalSolveSpec& spec) {
  if (!spec.scaling) {
    throw Error(ErrorCode::kInvalidArgument, "ALADIN subproblem requires a scaling matrix Sigma_i");
  }
  return run(spec);
}

std::vector<Index> detect_active_set(const Vector& h_values, const Vector& kappa, double activity_tol) {
  if (kappa.size() != 0 && kappa.size() != h_values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "constraint values and multipliers differ in length");
  }
  std::vector<Index> active;
  for (Index j = 0; j < h_values.size(); ++j) {
    if (std::abs(h_values(j)) <= activity_tol) active.push_back(j);
  }
  return active;
}

double default_activity_tolerance(const Vector& h_values, double base) {
  const double scale = h_values.size() > 0 ? h_values.lpNorm<Eigen::Infinity>() : 0.0;
  return base * (1.0 + scale);
}

}  // namespace distopt
