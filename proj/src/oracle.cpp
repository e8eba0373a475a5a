#include "distopt/oracle.hpp"

#include "distopt/random.hpp"

#include <algorithm>
#include <cmath>

namespace distopt {

double KktReport::max() const { return std::max({stationarity, primal, complementarity, dual_feasibility}); }

KktReport kkt_check(const PartiallySeparableProblem& problem, const Vector& x, const Vector& lambda,
                    const std::vector<Vector>& kappa) {
  if (lambda.size() != problem.coupling_rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "multiplier length does not match coupling rows");
  }
  if (static_cast<Index>(kappa.size()) != problem.num_subsystems()) {
    throw Error(ErrorCode::kDimensionMismatch, "one inequality multiplier vector per subsystem required");
  }
  const std::vector<Vector> parts = problem.split(x);
  KktReport r;
  r.primal = coupling_residual(problem, parts).lpNorm<1>();
  double worst_h = 0.0;
  for (Index i = 0; i < problem.num_subsystems(); ++i) {
    const Subsystem& s = problem.subsystems[static_cast<std::size_t>(i)];
    const Vector& xi = parts[static_cast<std::size_t>(i)];
    const Vector& ki = kappa[static_cast<std::size_t>(i)];
    if (ki.size() != s.inequalities.count) {
      throw Error(ErrorCode::kDimensionMismatch, "inequality multiplier length mismatch").with_subsystem(s.id);
    }
    Vector grad = s.objective.gradient(xi);
    if (s.coupling.rows() > 0) grad += s.coupling.transpose() * lambda;
    if (s.inequalities.count > 0) {
      const Vector h = s.inequalities.value_at(xi);
      grad += s.inequalities.jacobian_at(xi).transpose() * ki;
      if (h.size() > 0) worst_h = std::max(worst_h, h.maxCoeff());
      r.complementarity = std::max(r.complementarity, ki.cwiseProduct(h).cwiseAbs().maxCoeff());
      r.dual_feasibility = std::max(r.dual_feasibility, -ki.minCoeff());
    }
    if (grad.size() > 0) r.stationarity = std::max(r.stationarity, grad.lpNorm<Eigen::Infinity>());
  }
  r.primal += worst_h;
  return r;
}

NlpProblem stacked_nlp(const PartiallySeparableProblem& problem) {
  require_consistent(problem);
  const std::vector<Index> offsets = problem.offsets();
  const std::vector<Index> dims = problem.dims();
  const Index n = problem.total_dim();
  NlpProblem nlp;
  nlp.dim = n;
  nlp.objective.value = [&problem, offsets, dims](const Vector& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      v += problem.subsystems[i].objective.value(x.segment(offsets[i], dims[i]));
    }
    return v;
  };
  nlp.objective.gradient = [&problem, offsets, dims, n](const Vector& x) {
    Vector g = Vector::Zero(n);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      g.segment(offsets[i], dims[i]) = problem.subsystems[i].objective.gradient(x.segment(offsets[i], dims[i]));
    }
    return g;
  };
  nlp.objective.hessian = [&problem, offsets, dims, n](const Vector& x) {
    Matrix h = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      h.block(offsets[i], offsets[i], dims[i], dims[i]) =
          problem.subsystems[i].objective.hessian_at(x.segment(offsets[i], dims[i]));
    }
    return h;
  };

  std::vector<Index> row_offsets;
  Index rows = 0;
  for (const Subsystem& s : problem.subsystems) {
    row_offsets.push_back(rows);
    rows += s.inequalities.count;
  }
  ConstraintFunction ineq;
  ineq.count = rows;
  ineq.value = [&problem, offsets, dims, row_offsets, rows](const Vector& x) {
    Vector v(rows);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const ConstraintFunction& c = problem.subsystems[i].inequalities;
      if (c.count > 0) v.segment(row_offsets[i], c.count) = c.value_at(x.segment(offsets[i], dims[i]));
    }
    return v;
  };
  ineq.jacobian = [&problem, offsets, dims, row_offsets, rows, n](const Vector& x) {
    Matrix j = Matrix::Zero(rows, n);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const ConstraintFunction& c = problem.subsystems[i].inequalities;
      if (c.count > 0) {
        j.block(row_offsets[i], offsets[i], c.count, dims[i]) = c.jacobian_at(x.segment(offsets[i], dims[i]));
      }
    }
    return j;
  };
  ineq.weighted_hessian = [&problem, offsets, dims, row_offsets, n](const Vector& x, const Vector& w) {
    Matrix h = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const ConstraintFunction& c = problem.subsystems[i].inequalities;
      if (c.count > 0) {
        h.block(offsets[i], offsets[i], dims[i], dims[i]) =
            c.weighted_hessian_at(x.segment(offsets[i], dims[i]), w.segment(row_offsets[i], c.count));
      }
    }
    return h;
  };
  nlp.inequalities = ineq;

  Matrix a(problem.coupling_rows(), n);
  for (std::size_t i = 0; i < dims.size(); ++i) a.middleCols(offsets[i], dims[i]) = problem.subsystems[i].coupling;
  nlp.equalities = ConstraintFunction::linear(a, problem.b);
  return nlp;
}

namespace {

OracleResult package(const PartiallySeparableProblem& problem, const SqpResult& sqp) {
  OracleResult out;
  out.x = sqp.x;
  out.parts = problem.split(sqp.x);
  out.lambda = sqp.eq_multipliers;
  Index row = 0;
  for (const Subsystem& s : problem.subsystems) {
    out.kappa.push_back(sqp.ineq_multipliers.segment(row, s.inequalities.count));
    row += s.inequalities.count;
  }
  out.objective = evaluate_total_objective(problem, out.parts);
  out.status = sqp.status;
  out.iterations = sqp.iterations;
  out.report = kkt_check(problem, out.x, out.lambda, out.kappa);
  return out;
}

bool better(const OracleResult& a, const OracleResult& b) {
  const bool ca = a.status == SqpStatus::kConverged;
  const bool cb = b.status == SqpStatus::kConverged;
  if (ca != cb) return ca;
  if (!ca) return a.report.max() < b.report.max();
  return a.objective < b.objective - 1e-12 * (1.0 + std::abs(b.objective));
}

}  // namespace

OracleResult centralized_solve(const PartiallySeparableProblem& problem, const Vector& initial,
                               const OracleOptions& options) {
  const NlpProblem nlp = stacked_nlp(problem);
  Vector start = initial.size() == 0 ? Vector(Vector::Zero(nlp.dim)) : initial;
  if (start.size() != nlp.dim) throw Error(ErrorCode::kDimensionMismatch, "oracle start has wrong length");
  SqpOptions sqp_opts;
  sqp_opts.tolerance = options.tolerance;
  sqp_opts.max_iterations = options.max_iterations;

  OracleResult best = package(problem, sqp_solve(nlp, start, sqp_opts));
  Rng rng(options.seed);
  for (int k = 0; k < options.multistart; ++k) {
    Vector x0 = start;
    for (Index j = 0; j < x0.size(); ++j) x0(j) += options.perturbation * rng.uniform(-1.0, 1.0);
    OracleResult cand = package(problem, sqp_solve(nlp, x0, sqp_opts));
    if (better(cand, best)) best = std::move(cand);
  }
  return best;
}

Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
  Vector g(x.size());
  Vector xp = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = step * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + h;
    const double fp = f(xp);
    xp(j) = x(j) - h;
    const double fm = f(xp);
    xp(j) = x(j);
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double step) {
  Matrix j;
  Vector xp = x;
  for (Index c = 0; c < x.size(); ++c) {
    const double h = step * (1.0 + std::abs(x(c)));
    xp(c) = x(c) + h;
    const Vector fp = f(xp);
    xp(c) = x(c) - h;
    const Vector fm = f(xp);
    xp(c) = x(c);
    if (c == 0) j.resize(fp.size(), x.size());
    j.col(c) = (fp - fm) / (2.0 * h);
  }
  return j;
}

}  // namespace distopt
