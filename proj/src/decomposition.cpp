#include "distopt/decomposition.hpp"

#include "distopt/sqp.hpp"

#include <cmath>

namespace distopt {

namespace {

struct InnerSolution {
  Vector w;
  double value = 0.0;
  Vector grad_z;
  Matrix reduced_hessian;
};

InnerSolution solve_inner(const BlockCost& block, const Vector& z, const Vector& start, double tol,
                          const char* label) {
  const Index nw = block.local_dim;
  const SmoothFunction cost = block.cost;
  auto stacked = [z, nw](const Vector& w) {
    Vector v(nw + z.size());
    v << w, z;
    return v;
  };
  InnerSolution out;
  if (nw == 0) {
    out.w = Vector(0);
  } else {
    NlpProblem nlp;
    nlp.dim = nw;
    nlp.objective.value = [cost, stacked](const Vector& w) { return cost.value(stacked(w)); };
    nlp.objective.gradient = [cost, stacked, nw](const Vector& w) -> Vector {
      return cost.gradient(stacked(w)).head(nw);
    };
    nlp.objective.hessian = [cost, stacked, nw](const Vector& w) -> Matrix {
      return cost.hessian_at(stacked(w)).topLeftCorner(nw, nw);
    };
    nlp.inequalities = ConstraintFunction::none();
    nlp.equalities = ConstraintFunction::none();
    SqpOptions opts;
    opts.tolerance = tol;
    const SqpResult r = sqp_solve(nlp, start, opts);
    if (r.status != SqpStatus::kConverged) {
      throw Error(ErrorCode::kSolverFailure, std::string("inner minimization of ") + label +
                                                 " did not converge (" + to_string(r.status) + ")")
          .with_last_iterate(z);
    }
    out.w = r.x;
  }
  const Vector v = stacked(out.w);
  out.value = cost.value(v);
  const Vector g = cost.gradient(v);
  out.grad_z = g.tail(z.size());
  const Matrix h = cost.hessian_at(v);
  const Matrix hzz = h.bottomRightCorner(z.size(), z.size());
  if (nw == 0) {
    out.reduced_hessian = hzz;
  } else {
    const Matrix hww = h.topLeftCorner(nw, nw);
    const Matrix hwz = h.topRightCorner(nw, z.size());
    Eigen::LDLT<Matrix> ldlt(hww);
    out.reduced_hessian = hzz - hwz.transpose() * ldlt.solve(hwz);
  }
  return out;
}

void check_block(const BlockCost& block, Index shared_dim, const char* label) {
  if (block.shared_dim != shared_dim) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(label) + " has a different shared dimension");
  }
  if (!block.cost.value || !block.cost.gradient) {
    throw Error(ErrorCode::kInvalidArgument, std::string(label) + " has no value or gradient");
  }
}

}  // namespace

PrimalDecompositionResult primal_decomposition_solve(const BlockCost& k1, const BlockCost& k2,
                                                     const PrimalDecompositionOptions& options) {
  const Index nz = k1.shared_dim;
  check_block(k1, nz, "k1");
  check_block(k2, nz, "k2");
  Vector z = Vector::Zero(nz);
  Vector x = Vector::Zero(k1.local_dim);
  Vector y = Vector::Zero(k2.local_dim);

  PrimalDecompositionResult result;
  for (int it = 0;; ++it) {
    const InnerSolution s1 = solve_inner(k1, z, x, options.inner_tolerance, "k1");
    const InnerSolution s2 = solve_inner(k2, z, y, options.inner_tolerance, "k2");
    x = s1.w;
    y = s2.w;
    const double phi = s1.value + s2.value;
    const Vector grad = s1.grad_z + s2.grad_z;
    result.x = x;
    result.y = y;
    result.z = z;
    result.value = phi;
    result.iterations = it;
    if (nz == 0 || grad.lpNorm<Eigen::Infinity>() <= options.tolerance) return result;
    if (it >= options.max_iterations) {
      throw Error(ErrorCode::kSolverFailure, "primal master problem did not converge")
          .with_iteration(it)
          .with_last_iterate(z);
    }
    Matrix hess = s1.reduced_hessian + s2.reduced_hessian;
    hess = regularize_by_shift(0.5 * (hess + hess.transpose()), 1e-8);
    const Vector step = -hess.ldlt().solve(grad);
    double alpha = 1.0;
    while (true) {
      const Vector trial = z + alpha * step;
      const InnerSolution t1 = solve_inner(k1, trial, x, options.inner_tolerance, "k1");
      const InnerSolution t2 = solve_inner(k2, trial, y, options.inner_tolerance, "k2");
      if (t1.value + t2.value <= phi + 1e-4 * alpha * grad.dot(step) || alpha < 1e-10) {
        z = trial;
        break;
      }
      alpha *= 0.5;
    }
  }
}

DualAscentResult dual_ascent_solve(const SmoothFunction& k1, const SmoothFunction& k2, Index dim,
                                   const DualAscentOptions& options) {
  if (!(options.step_size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dual step size must be positive");

  auto minimize = [dim](const SmoothFunction& k, const Vector& lin, const Vector& start) {
    NlpProblem nlp;
    nlp.dim = dim;
    nlp.objective.value = [k, lin](const Vector& z) { return k.value(z) + lin.dot(z); };
    nlp.objective.gradient = [k, lin](const Vector& z) -> Vector { return k.gradient(z) + lin; };
    nlp.objective.hessian = [k](const Vector& z) -> Matrix { return k.hessian_at(z); };
    nlp.inequalities = ConstraintFunction::none();
    nlp.equalities = ConstraintFunction::none();
    SqpOptions opts;
    opts.tolerance = 1e-12;
    const SqpResult r = sqp_solve(nlp, start, opts);
    if (r.status != SqpStatus::kConverged) {
      throw Error(ErrorCode::kSolverFailure, "dual function evaluation did not converge").with_last_iterate(r.x);
    }
    return r.x;
  };

  struct DualPoint {
    Vector z1, z2;
    double value = 0.0;
  };
  auto evaluate = [&](const Vector& lambda, const DualPoint& warm) {
    DualPoint p;
    p.z1 = minimize(k1, lambda, warm.z1);
    p.z2 = minimize(k2, -lambda, warm.z2);
    p.value = k1.value(p.z1) + k2.value(p.z2) + lambda.dot(p.z1 - p.z2);
    return p;
  };

  Vector lambda = Vector::Zero(dim);
  DualPoint warm{Vector::Zero(dim), Vector::Zero(dim), 0.0};
  DualPoint current = evaluate(lambda, warm);
  double step = options.step_size;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Vector gap = current.z1 - current.z2;
    if (gap.lpNorm<Eigen::Infinity>() <= options.tolerance) break;
    const Vector trial_lambda = lambda + step * gap;
    const DualPoint trial = evaluate(trial_lambda, current);
    if (trial.value < current.value - 1e-14 * (1.0 + std::abs(current.value))) {
      step *= 0.5;
      if (step < 1e-12 * options.step_size) {
        throw Error(ErrorCode::kSolverFailure, "dual ascent diverged: dual value keeps decreasing")
            .with_iteration(it)
            .with_last_iterate(lambda);
      }
      continue;
    }
    lambda = trial_lambda;
    current = trial;
  }
  DualAscentResult result;
  result.z1 = current.z1;
  result.z2 = current.z2;
  result.lambda = lambda;
  result.dual_value = current.value;
  result.consensus_gap = dim > 0 ? (current.z1 - current.z2).lpNorm<Eigen::Infinity>() : 0.0;
  result.gap_flagged = result.consensus_gap > options.tolerance;
  result.iterations = it;
  return result;
}

}  // namespace distopt
