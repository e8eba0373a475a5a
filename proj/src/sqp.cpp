#include "distopt/sqp.hpp"

#include "distopt/dense_qp.hpp"

#include <algorithm>
#include <cmath>

namespace distopt {

const char* to_string(SqpStatus status) {
  switch (status) {
    case SqpStatus::kConverged: return "converged";
    case SqpStatus::kMaxIterations: return "max_iter";
    case SqpStatus::kLineSearchFailure: return "line_search_failure";
    case SqpStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

struct Evaluation {
  double f = 0.0;
  Vector g;
  Vector h;
  Matrix jh;
  Vector e;
  Matrix je;
};

Evaluation evaluate(const NlpProblem& nlp, const Vector& x) {
  Evaluation ev;
  ev.f = nlp.objective.value(x);
  ev.g = nlp.objective.gradient(x);
  ev.h = nlp.inequalities.value_at(x);
  ev.jh = nlp.inequalities.jacobian_at(x);
  ev.e = nlp.equalities.value_at(x);
  ev.je = nlp.equalities.jacobian_at(x);
  return ev;
}

double l1_violation(const Vector& h, const Vector& e) {
  return h.cwiseMax(0.0).sum() + e.cwiseAbs().sum();
}

double max_violation(const Vector& h, const Vector& e) {
  double v = 0.0;
  if (h.size() > 0) v = std::max(v, h.maxCoeff());
  if (e.size() > 0) v = std::max(v, e.cwiseAbs().maxCoeff());
  return v;
}

KktResiduals residuals_from(const Evaluation& ev, const Vector& kappa, const Vector& nu) {
  KktResiduals r;
  Vector grad_l = ev.g;
  if (kappa.size() > 0) grad_l.noalias() += ev.jh.transpose() * kappa;
  if (nu.size() > 0) grad_l.noalias() += ev.je.transpose() * nu;
  r.stationarity = grad_l.size() > 0 ? grad_l.lpNorm<Eigen::Infinity>() : 0.0;
  r.primal = max_violation(ev.h, ev.e);
  r.complementarity = kappa.size() > 0 ? kappa.cwiseProduct(ev.h).cwiseAbs().maxCoeff() : 0.0;
  return r;
}

double min_eigenvalue(const Matrix& b) {
  if (b.rows() == 0) return kInf;
  Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Gauss-Newton / Levenberg-Marquardt on 0.5*||max(h,0)||^2 + 0.5*||e||^2.
Vector restore_feasibility(const NlpProblem& nlp, Vector x, double target) {
  double damping = 1e-4;
  auto psi = [&](const Vector& z) {
    const Vector h = nlp.inequalities.value_at(z);
    const Vector e = nlp.equalities.value_at(z);
    return 0.5 * (h.cwiseMax(0.0).squaredNorm() + e.squaredNorm());
  };
  double current = psi(x);
  for (int it = 0; it < 200 && current > 0.5 * target * target; ++it) {
    const Vector h = nlp.inequalities.value_at(x);
    const Matrix jh = nlp.inequalities.jacobian_at(x);
    const Vector e = nlp.equalities.value_at(x);
    const Matrix je = nlp.equalities.jacobian_at(x);
    std::vector<Index> violated;
    for (Index j = 0; j < h.size(); ++j) {
      if (h(j) > 0.0) violated.push_back(j);
    }
    const Index rows = static_cast<Index>(violated.size()) + e.size();
    Matrix jac(rows, x.size());
    Vector res(rows);
    for (std::size_t k = 0; k < violated.size(); ++k) {
      jac.row(static_cast<Index>(k)) = jh.row(violated[k]);
      res(static_cast<Index>(k)) = h(violated[k]);
    }
    if (e.size() > 0) {
      jac.bottomRows(e.size()) = je;
      res.tail(e.size()) = e;
    }
    const Vector grad = jac.transpose() * res;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + res.norm())) break;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Matrix normal = jac.transpose() * jac;
      normal.diagonal().array() += damping;
      const Vector step = -normal.ldlt().solve(grad);
      const Vector trial = x + step;
      const double value = psi(trial);
      if (value < current) {
        x = trial;
        current = value;
        damping = std::max(1e-12, damping / 3.0);
        improved = true;
        break;
      }
      damping *= 4.0;
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace

Matrix regularize_by_shift(const Matrix& b, double floor) {
  const double lmin = min_eigenvalue(b);
  if (lmin >= floor) return b;
  double tau = 1e-8;
  while (lmin + tau < floor) tau *= 2.0;
  Matrix shifted = b;
  shifted.diagonal().array() += tau;
  return shifted;
}

KktResiduals nlp_kkt_residuals(const NlpProblem& nlp, const Vector& x, const Vector& kappa,
                               const Vector& nu) {
  return residuals_from(evaluate(nlp, x), kappa, nu);
}

SqpResult sqp_solve(const NlpProblem& nlp, const Vector& start, const SqpOptions& options) {
  if (start.size() != nlp.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "sqp start has length " + std::to_string(start.size()) +
                                                   ", expected " + std::to_string(nlp.dim));
  }
  if (!start.allFinite()) throw Error(ErrorCode::kInvalidArgument, "sqp start is not finite");

  const Index mi = nlp.inequalities.count;
  const Index me = nlp.equalities.count;
  SqpResult result;
  Vector x = start;
  Vector kappa = options.initial_ineq_multipliers.size() == mi
                     ? Vector(options.initial_ineq_multipliers.cwiseMax(0.0))
                     : Vector(Vector::Zero(mi));
  Vector nu = options.initial_eq_multipliers.size() == me ? options.initial_eq_multipliers
                                                          : Vector(Vector::Zero(me));
  double penalty = 1.0;
  int restorations = 0;
  const double feasibility_target = std::max(1e-9, options.tolerance);

  auto finish = [&](SqpStatus status, int iterations, const KktResiduals& res) {
    result.x = x;
    result.ineq_multipliers = kappa;
    result.eq_multipliers = nu;
    result.status = status;
    result.iterations = iterations;
    result.residuals = res;
    result.kkt_residual = res.max();
    return result;
  };

  Evaluation ev = evaluate(nlp, x);
  for (int it = 0;; ++it) {
    const KktResiduals res = residuals_from(ev, kappa, nu);
    if (res.max() <= options.tolerance) return finish(SqpStatus::kConverged, it, res);
    if (it >= options.max_iterations) return finish(SqpStatus::kMaxIterations, it, res);

    Matrix b = nlp.objective.hessian_at(x);
    if (mi > 0) b += nlp.inequalities.weighted_hessian_at(x, kappa);
    if (me > 0) b += nlp.equalities.weighted_hessian_at(x, nu);
    b = 0.5 * (b + b.transpose());

    Vector linear = ev.g;
    const double lmin = min_eigenvalue(b);
    if (lmin < 1e-8) {
      // Augment with c*J_a'J_a over nearly active rows; this leaves the QP
      // solution unchanged whenever those rows stay active in it.
      const double htol = 1e-6 * (1.0 + (mi > 0 ? ev.h.cwiseAbs().maxCoeff() : 0.0));
      std::vector<Index> rows;
      for (Index j = 0; j < mi; ++j) {
        if (ev.h(j) >= -htol || kappa(j) > 0.0) rows.push_back(j);
      }
      const Index na = static_cast<Index>(rows.size()) + me;
      if (na > 0) {
        Matrix ja(na, nlp.dim);
        Vector ca(na);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          ja.row(static_cast<Index>(k)) = ev.jh.row(rows[k]);
          ca(static_cast<Index>(k)) = ev.h(rows[k]);
        }
        if (me > 0) {
          ja.bottomRows(me) = ev.je;
          ca.tail(me) = ev.e;
        }
        const Matrix jtj = ja.transpose() * ja;
        // Scale so the augmentation is comparable to the curvature already present.
        const double jscale = std::max(1.0, jtj.diagonal().maxCoeff());
        double c = 10.0 * std::max({1.0, std::abs(lmin), b.cwiseAbs().maxCoeff()}) / jscale;
        Matrix trial = b + c * jtj;
        for (int k = 0; k < 4 && min_eigenvalue(trial) < 1e-8; ++k) {
          c *= 10.0;
          trial = b + c * jtj;
        }
        if (min_eigenvalue(trial) >= 1e-8) {
          b = trial;
          linear += c * ja.transpose() * ca;
        }
      }
      b = regularize_by_shift(b, 1e-8);
    }

    DenseQp qp;
    qp.hessian = b;
    qp.linear = linear;
    qp.eq_matrix = ev.je;
    qp.eq_rhs = -ev.e;
    qp.ineq_matrix = ev.jh;
    qp.ineq_rhs = -ev.h;
    const DenseQpSolution qs = solve_dense_qp(qp);
    if (qs.status != QpStatus::kOptimal) {
      if (restorations < 3) {
        ++restorations;
        x = restore_feasibility(nlp, x, feasibility_target);
        ev = evaluate(nlp, x);
        if (max_violation(ev.h, ev.e) > 1e3 * feasibility_target) {
          return finish(SqpStatus::kInfeasible, it + 1, residuals_from(ev, kappa, nu));
        }
        continue;
      }
      return finish(SqpStatus::kInfeasible, it + 1, res);
    }

    const Vector& d = qs.x;
    const Vector& kappa_qp = qs.ineq_multipliers;
    const Vector& nu_qp = qs.eq_multipliers;
    double max_mult = 0.0;
    if (mi > 0) max_mult = std::max(max_mult, kappa_qp.lpNorm<Eigen::Infinity>());
    if (me > 0) max_mult = std::max(max_mult, nu_qp.lpNorm<Eigen::Infinity>());
    penalty = std::max(penalty, 1.1 * max_mult + 1e-3);

    const double viol0 = l1_violation(ev.h, ev.e);
    const double phi0 = ev.f + penalty * viol0;
    double dphi = ev.g.dot(d) - penalty * viol0;
    if (dphi >= 0.0) dphi = -d.dot(b * d);

    double alpha = 1.0;
    Evaluation trial_ev;
    while (true) {
      const Vector xt = x + alpha * d;
      trial_ev = evaluate(nlp, xt);
      const double phit = trial_ev.f + penalty * l1_violation(trial_ev.h, trial_ev.e);
      bool accept = std::isfinite(phit) && phit <= phi0 + options.armijo * alpha * dphi;
      if (!accept && alpha == 1.0 && std::isfinite(phit)) {
        // Full steps that halve the KKT error are taken regardless of the merit.
        accept = residuals_from(trial_ev, kappa_qp, nu_qp).max() <= 0.5 * res.max();
      }
      if (!accept && std::isfinite(phit) && -dphi <= 1e-14 * (1.0 + std::abs(phi0))) accept = true;
      if (accept) {
        x = xt;
        break;
      }
      alpha *= options.backtrack;
      if (alpha < 1e-10) return finish(SqpStatus::kLineSearchFailure, it + 1, res);
    }
    ev = std::move(trial_ev);
    kappa += alpha * (kappa_qp - kappa);
    nu += alpha * (nu_qp - nu);
  }
}

}  // namespace distopt
