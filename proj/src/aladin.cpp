#include "distopt/aladin.hpp"

#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace distopt {

const char* to_string(HessianMode mode) { return mode == HessianMode::kExact ? "exact" : "bfgs"; }

void validate(const AladinParams& params, const PartiallySeparableProblem& problem) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (!(params.rho >= 0.0)) bad("ALADIN needs rho >= 0");
  if (!(params.mu > 0.0)) bad("ALADIN needs mu > 0");
  if (!(params.epsilon > 0.0)) bad("ALADIN needs epsilon > 0");
  if (params.max_iterations <= 0) bad("ALADIN needs max_iter > 0");
  for (double a : {params.alpha1, params.alpha2, params.alpha3}) {
    if (!(a >= 0.0 && a <= 1.0)) bad("ALADIN step sizes must lie in [0, 1]");
  }
  if (params.scaling == ScalingRule::kUser) {
    if (params.user_scaling.size() != problem.subsystems.size()) bad("one scaling matrix per subsystem required");
    for (std::size_t i = 0; i < params.user_scaling.size(); ++i) {
      const Index n = problem.subsystems[i].dim;
      if (params.user_scaling[i].rows() != n || params.user_scaling[i].cols() != n) {
        throw Error(ErrorCode::kDimensionMismatch, "scaling matrix of subsystem " + std::to_string(i) +
                                                       " has wrong shape")
            .with_subsystem(static_cast<Index>(i));
      }
    }
  }
}

std::vector<Matrix> scaling_matrices(const AladinParams& params, const PartiallySeparableProblem& problem) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < problem.subsystems.size(); ++i) {
    const Subsystem& s = problem.subsystems[i];
    switch (params.scaling) {
      case ScalingRule::kIdentity: out.push_back(Matrix::Identity(s.dim, s.dim)); break;
      case ScalingRule::kCouplingGram: out.push_back(s.coupling.transpose() * s.coupling); break;
      case ScalingRule::kUser: out.push_back(params.user_scaling.at(i)); break;
    }
  }
  return out;
}

BfgsMemory BfgsMemory::identity(Index n) {
  BfgsMemory m;
  m.hessian = Matrix::Identity(n, n);
  return m;
}

void bfgs_update(BfgsMemory& memory, const Vector& point, const Vector& lagrangian_gradient) {
  if (!memory.has_previous) {
    memory.previous_point = point;
    memory.previous_gradient = lagrangian_gradient;
    memory.has_previous = true;
    return;
  }
  const Vector s = point - memory.previous_point;
  if (s.norm() <= 1e-14 * (1.0 + point.norm())) return;
  const Vector y = lagrangian_gradient - memory.previous_gradient;
  if (!memory.scaled) {
    // Rescale the identity start once the first curvature pair is known.
    const double ys = y.dot(s);
    if (ys > 1e-16 * s.squaredNorm() * std::max(1.0, y.norm())) memory.hessian *= ys / s.squaredNorm();
    memory.scaled = true;
  }
  const Matrix& b = memory.hessian;
  const Vector bs = b * s;
  const double sbs = s.dot(bs);
  const double sy = s.dot(y);
  Vector r = y;
  if (sy < 0.2 * sbs) {
    const double theta = 0.8 * sbs / (sbs - sy);
    r = theta * y + (1.0 - theta) * bs;
  }
  const double sr = s.dot(r);
  memory.previous_point = point;
  memory.previous_gradient = lagrangian_gradient;
  if (!(sbs > 0.0) || !(sr > 1e-16 * s.squaredNorm())) return;
  Matrix updated = b - bs * bs.transpose() / sbs + r * r.transpose() / sr;
  memory.hessian = 0.5 * (updated + updated.transpose());
}

Matrix build_active_jacobian(const Subsystem& subsystem, const Vector& y, const Vector& kappa,
                             double activity_tol, std::vector<Index>* rows) {
  const Vector h = subsystem.inequalities.value_at(y);
  const Matrix jac = subsystem.inequalities.jacobian_at(y);
  std::vector<Index> active;
  for (Index j : detect_active_set(h, kappa, activity_tol)) {
    if (jac.row(j).lpNorm<Eigen::Infinity>() > 0.0) active.push_back(j);
  }
  if (rows) *rows = active;
  Matrix c(static_cast<Index>(active.size()), subsystem.dim);
  for (std::size_t k = 0; k < active.size(); ++k) c.row(static_cast<Index>(k)) = jac.row(active[k]);
  return c;
}

Vector modified_gradient(const Subsystem& subsystem, const Vector& y, const Vector& kappa_active,
                         const Matrix& c_exact, const Matrix& c_used) {
  if (c_exact.rows() != c_used.rows() || c_exact.rows() != kappa_active.size() ||
      (c_exact.rows() > 0 && (c_exact.cols() != subsystem.dim || c_used.cols() != subsystem.dim))) {
    throw Error(ErrorCode::kDimensionMismatch, "modified gradient inputs have inconsistent shapes")
        .with_subsystem(subsystem.id);
  }
  Vector g = subsystem.objective.gradient(y);
  if (c_exact.rows() > 0) g += (c_exact - c_used).transpose() * kappa_active;
  return g;
}

StepResult step_update(const Vector& x, const Vector& lambda, const Vector& y, const Vector& dy,
                       const Vector& lambda_qp, double alpha1, double alpha2, double alpha3) {
  if (x.size() != y.size() || x.size() != dy.size() || lambda.size() != lambda_qp.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "step update inputs have inconsistent shapes");
  }
  return {x + alpha1 * (y - x) + alpha2 * dy, lambda + alpha3 * (lambda_qp - lambda)};
}

Vector local_lagrangian_gradient(const Subsystem& subsystem, const Vector& y, const Vector& kappa) {
  Vector g = subsystem.objective.gradient(y);
  if (subsystem.inequalities.count > 0 && kappa.size() == subsystem.inequalities.count) {
    g += subsystem.inequalities.jacobian_at(y).transpose() * kappa;
  }
  return g;
}

Matrix regularized_exact_hessian(const Subsystem& subsystem, const Vector& y, const Vector& kappa,
                                 const Matrix& active_jacobian, double floor) {
  Matrix h = subsystem.objective.hessian_at(y);
  if (subsystem.inequalities.count > 0 && kappa.size() == subsystem.inequalities.count) {
    h += subsystem.inequalities.weighted_hessian_at(y, kappa);
  }
  h = 0.5 * (h + h.transpose());
  auto min_eig = [](const Matrix& m) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  };
  if (h.rows() == 0) return h;
  const double lmin = min_eig(h);
  if (lmin >= floor) return h;
  if (active_jacobian.rows() > 0) {
    const Matrix ctc = active_jacobian.transpose() * active_jacobian;
    const double cscale = std::max(1.0, ctc.diagonal().maxCoeff());
    const double c = 10.0 * std::max({1.0, std::abs(lmin), h.cwiseAbs().maxCoeff()}) / cscale;
    h += c * ctc;
    // Curvature missing inside the null space of C cannot be supplied by C'C.
    if (min_eig(h) >= floor) return h;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Vector d = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

AladinState aladin_initial_state(const PartiallySeparableProblem& problem, const AladinParams& params,
                                 const Vector& initial, const Vector& initial_lambda) {
  require_consistent(problem);
  validate(params, problem);
  const Vector x0 = initial.size() > 0 ? initial : Vector(Vector::Zero(problem.total_dim()));
  AladinState s;
  s.x = problem.split(x0);
  if (initial_lambda.size() > 0 && initial_lambda.size() != problem.coupling_rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial multiplier has wrong length");
  }
  s.lambda = initial_lambda.size() > 0 ? initial_lambda : Vector(Vector::Zero(problem.coupling_rows()));
  s.local.resize(problem.subsystems.size());
  for (std::size_t i = 0; i < problem.subsystems.size(); ++i) {
    s.local[i].y = s.x[i];
    s.memory.push_back(BfgsMemory::identity(problem.subsystems[i].dim));
  }
  s.mu = params.mu;
  return s;
}

namespace {

struct Derivatives {
  Matrix c;
  Vector g;
  Matrix h;
};

Derivatives derivatives(const Subsystem& sub, const LocalSolution& sol, const AladinParams& params,
                        BfgsMemory& memory) {
  Derivatives d;
  const Vector h = sub.inequalities.value_at(sol.y);
  const double tol = params.activity_tol > 0.0 ? params.activity_tol : default_activity_tolerance(h);
  std::vector<Index> rows;
  d.c = build_active_jacobian(sub, sol.y, sol.kappa, tol, &rows);
  Vector kappa_active(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    kappa_active(static_cast<Index>(k)) =
        sol.kappa.size() == sub.inequalities.count ? sol.kappa(rows[k]) : 0.0;
  }
  d.g = modified_gradient(sub, sol.y, kappa_active, d.c, d.c);
  if (params.hessian == HessianMode::kExact) {
    d.h = regularized_exact_hessian(sub, sol.y, sol.kappa, d.c, params.hessian_floor);
  } else {
    if (memory.has_previous) {
      memory.previous_gradient = local_lagrangian_gradient(sub, memory.previous_point, sol.kappa);
    }
    bfgs_update(memory, sol.y, local_lagrangian_gradient(sub, sol.y, sol.kappa));
    d.h = memory.hessian;
  }
  return d;
}

}  // namespace

AladinState aladin_iterate(const AladinState& state, const PartiallySeparableProblem& problem,
                           const AladinParams& params, CommLedger* ledger) {
  const std::size_t count = problem.subsystems.size();
  if (state.x.size() != count || state.lambda.size() != problem.coupling_rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "ALADIN state does not match the problem");
  }
  const std::vector<Matrix> sigma = scaling_matrices(params, problem);
  const int it = state.iteration;
  AladinState next = state;
  if (next.memory.size() != count) {
    next.memory.clear();
    for (const Subsystem& s : problem.subsystems) next.memory.push_back(BfgsMemory::identity(s.dim));
  }

  std::vector<Derivatives> deriv(count);
  detail::for_each_subsystem(count, params.parallel, [&](std::size_t i) {
    LocalSolveSpec spec;
    spec.subsystem = &problem.subsystems[i];
    spec.anchor = state.x[i];
    spec.lambda = state.lambda;
    spec.rho = params.rho;
    spec.scaling = sigma[i];
    spec.tolerance = params.local_tolerance;
    if (i < state.local.size() && state.local[i].y.size() == state.x[i].size()) {
      spec.start = state.local[i].y;
      spec.warm_multipliers = state.local[i].kappa;
    }
    next.local[i] = solve_aladin_subproblem(spec);
    const LocalSolution& sol = next.local[i];
    if (sol.status == LocalStatus::kInfeasible ||
        (sol.status != LocalStatus::kConverged && !(sol.kkt_residual <= 1e-6))) {
      throw Error(sol.status == LocalStatus::kInfeasible ? ErrorCode::kInfeasible : ErrorCode::kSolverFailure,
                  "local solve of subsystem " + std::to_string(i) + " failed at iteration " +
                      std::to_string(it) + " (" + to_string(sol.status) + ")")
          .with_subsystem(static_cast<Index>(i))
          .with_iteration(it)
          .with_last_iterate(sol.y);
    }
    deriv[i] = derivatives(problem.subsystems[i], sol, params, next.memory[i]);
  });

  std::vector<Vector> y(count);
  next.proximal_l1 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    y[i] = next.local[i].y;
    next.proximal_l1 += (sigma[i] * (y[i] - state.x[i])).lpNorm<1>();
    if (ledger) {
      const int sender = static_cast<int>(i);
      const Index n = y[i].size();
      ledger->record({sender, kCentralEntity, MessageKind::kLocalSolution, n, it});
      const Index hess = params.hessian == HessianMode::kExact ? packed_symmetric_size(n) : n;
      ledger->record({sender, kCentralEntity, MessageKind::kHessianInfo, hess, it});
      ledger->record({sender, kCentralEntity, MessageKind::kJacobianInfo, jacobian_block_size(n), it});
    }
  }
  next.residual_l1 = coupling_residual(problem, y).lpNorm<1>();
  next.iteration = it + 1;
  if (next.residual_l1 <= params.epsilon && next.proximal_l1 <= params.epsilon) {
    next.x = y;
    next.terminal = true;
    if (ledger) ledger->mark_terminal(it);
    return next;
  }

  AladinQpData data;
  data.lambda = state.lambda;
  data.mu = state.mu > 0.0 ? state.mu : params.mu;
  data.b = problem.b;
  for (std::size_t i = 0; i < count; ++i) {
    data.blocks.push_back(
        {deriv[i].h, deriv[i].g, deriv[i].c, problem.subsystems[i].coupling, y[i]});
  }
  try {
    next.qp = solve_aladin_qp(data);
  } catch (Error& e) {
    throw e.with_iteration(it);
  }

  const Vector lambda_old = state.lambda;
  for (std::size_t i = 0; i < count; ++i) {
    const StepResult st = step_update(state.x[i], lambda_old, y[i], next.qp->dy[i], next.qp->lambda_qp,
                                      params.alpha1, params.alpha2, params.alpha3);
    next.x[i] = st.x;
    next.lambda = st.lambda;
  }
  if (count == 0) next.lambda = lambda_old + params.alpha3 * (next.qp->lambda_qp - lambda_old);
  if (ledger) {
    for (std::size_t i = 0; i < count; ++i) {
      const Index n = next.x[i].size();
      ledger->record({kCentralEntity, static_cast<int>(i), MessageKind::kQpResult, n, it});
      ledger->record({kCentralEntity, static_cast<int>(i), MessageKind::kDualUpdate, n, it});
    }
  }
  return next;
}

AladinResult aladin_solve(const PartiallySeparableProblem& problem, const Vector& initial,
                          const AladinParams& params, CommLedger* ledger, const Vector& initial_lambda) {
  AladinState state = aladin_initial_state(problem, params, initial, initial_lambda);
  AladinResult result;
  const bool full_step = params.alpha1 == 1.0 && params.alpha2 == 1.0 && params.alpha3 == 1.0;

  // Snapshot taken before the most recent full step, for the (0, 0, 1) retry.
  std::optional<AladinState> before_step;
  std::vector<double> slack_history;
  double last_residual = kInf;

  while (state.iteration < params.max_iterations) {
    const AladinState input = state;
    state = aladin_iterate(input, problem, params, ledger);

    IterationRecord rec;
    rec.iteration = state.iteration - 1;
    rec.residual_l1 = state.residual_l1;
    rec.proximal_l1 = state.proximal_l1;
    std::vector<Vector> y;
    for (const LocalSolution& s : state.local) y.push_back(s.y);
    rec.objective = evaluate_total_objective(problem, y);
    rec.mu = state.mu;
    rec.terminal = state.terminal;
    if (state.qp && !state.terminal) {
      rec.slack_norm = state.qp->slack.norm();
      double dy = 0.0;
      for (const Vector& d : state.qp->dy) dy += d.squaredNorm();
      rec.step_norm = std::sqrt(dy);
    }

    if (!state.terminal && params.fallback && full_step && before_step &&
        state.residual_l1 > 10.0 * last_residual) {
      // The previous full step made things worse: redo it as x+ = x, lambda+ = lambda_QP.
      AladinState retry = state;
      retry.x = before_step->x;
      retry.lambda = input.qp ? input.qp->lambda_qp : before_step->lambda;
      retry.qp.reset();
      rec.fallback = true;
      ++result.fallbacks;
      result.trace.push_back(rec);
      before_step.reset();
      last_residual = kInf;
      state = retry;
      continue;
    }
    result.trace.push_back(rec);
    if (state.terminal) break;

    before_step = input;
    last_residual = state.residual_l1;
    if (params.grow_mu) {
      slack_history.push_back(rec.slack_norm);
      const std::size_t k = slack_history.size();
      if (k >= 6 && rec.slack_norm > params.epsilon &&
          slack_history[k - 1] > 0.9 * slack_history[k - 6] && state.mu < params.mu_max) {
        state.mu = std::min(params.mu_max, state.mu * 10.0);
        slack_history.clear();
      }
    }
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
