#include "distopt/dense_qp.hpp"

#include <algorithm>
#include <cmath>

namespace distopt {

namespace {

// Constraint in Goldfarb-Idnani form n'x >= b.
struct ActiveRow {
  Vector normal;
  double rhs = 0.0;
  bool equality = false;
  Index source = 0;    // row in eq_matrix or ineq_matrix
  double sign = 1.0;   // equality orientation chosen on insertion
};

class DualActiveSet {
 public:
  explicit DualActiveSet(const DenseQp& qp) : qp_(qp) {}

  DenseQpSolution run() {
    DenseQpSolution sol;
    const Index n = qp_.hessian.rows();
    Eigen::LLT<Matrix> llt(qp_.hessian);
    if (llt.info() != Eigen::Success) {
      sol.status = QpStatus::kNotConvex;
      return sol;
    }
    g_inv_ = llt.solve(Matrix::Identity(n, n));
    x_ = -g_inv_ * qp_.linear;
    max_steps_ = 20 * static_cast<int>(n + qp_.eq_matrix.rows() + qp_.ineq_matrix.rows()) + 100;

    QpStatus status = QpStatus::kOptimal;
    for (Index i = 0; i < qp_.eq_matrix.rows() && status == QpStatus::kOptimal; ++i) {
      Vector normal = qp_.eq_matrix.row(i).transpose();
      double rhs = qp_.eq_rhs(i);
      double sign = 1.0;
      if (normal.dot(x_) - rhs > 0.0) sign = -1.0;
      status = add_constraint({sign * normal, sign * rhs, true, i, sign});
    }

    int unparks = 0;
    while (status == QpStatus::kOptimal) {
      const Index p = most_violated();
      if (p < 0) {
        // Later steps may have moved x away from a parked row.
        if (parked_.empty() || unparks >= 3 || !parked_violated()) break;
        parked_.clear();
        ++unparks;
        continue;
      }
      status = add_constraint({-qp_.ineq_matrix.row(p).transpose(), -qp_.ineq_rhs(p), false, p, 1.0});
    }

    if (status == QpStatus::kOptimal) polish();

    sol.status = status;
    sol.iterations = steps_;
    sol.x = x_;
    sol.eq_multipliers = Vector::Zero(qp_.eq_matrix.rows());
    sol.ineq_multipliers = Vector::Zero(qp_.ineq_matrix.rows());
    for (std::size_t j = 0; j < active_.size(); ++j) {
      const auto& row = active_[j];
      if (row.equality) {
        sol.eq_multipliers(row.source) = -row.sign * u_(static_cast<Index>(j));
      } else {
        sol.ineq_multipliers(row.source) = std::max(0.0, u_(static_cast<Index>(j)));
      }
    }
    return sol;
  }

 private:
  // Re-solves the KKT system of the final active set directly; the explicit
  // inverse used during the iterations loses accuracy on ill-conditioned H.
  bool dual_feasible(const Vector& u) const {
    const double uscale = 1.0 + (u_.size() > 0 ? u_.lpNorm<Eigen::Infinity>() : 0.0);
    for (std::size_t j = 0; j < active_.size(); ++j) {
      if (!active_[j].equality && u(static_cast<Index>(j)) < -1e-8 * uscale) return false;
    }
    return true;
  }

  // Solves the KKT system of the current active set directly.
  bool solve_active_kkt(Vector& x, Vector& u) const {
    const Index n = x_.size();
    const Index k = static_cast<Index>(active_.size());
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    kkt.topLeftCorner(n, n) = qp_.hessian;
    rhs.head(n) = -qp_.linear;
    for (Index j = 0; j < k; ++j) {
      kkt.block(0, n + j, n, 1) = -active_[j].normal;
      kkt.block(n + j, 0, 1, n) = active_[j].normal.transpose();
      rhs(n + j) = active_[j].rhs;
    }
    const Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) return false;
    Vector z = lu.solve(rhs);
    z += lu.solve(rhs - kkt * z);
    if (!z.allFinite()) return false;
    x = z.head(n);
    u = z.tail(k);
    return true;
  }

  // Re-solves the KKT system of the final active set directly; the explicit
  // inverse used during the iterations loses accuracy on ill-conditioned H.
  void polish() {
    Vector x, u;
    if (!solve_active_kkt(x, u)) return;
    if (!dual_feasible(u)) return;
    auto worst = [&](const Vector& p) {
      double w = 0.0;
      for (Index j = 0; j < qp_.ineq_matrix.rows(); ++j) {
        w = std::max(w, qp_.ineq_matrix.row(j).dot(p) - qp_.ineq_rhs(j));
      }
      return w;
    };
    if (worst(x) > std::max(worst(x_), 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>()))) return;
    x_ = x;
    u_ = u;
  }

  Index most_violated() const {
    Index best = -1;
    double worst = 0.0;
    const double xnorm = x_.lpNorm<Eigen::Infinity>();
    for (Index j = 0; j < qp_.ineq_matrix.rows(); ++j) {
      if (is_active_inequality(j)) continue;
      const double anorm = qp_.ineq_matrix.row(j).norm();
      if (anorm == 0.0) continue;
      const double slack = qp_.ineq_rhs(j) - qp_.ineq_matrix.row(j).dot(x_);
      const double tol = 1e-12 * (1.0 + std::abs(qp_.ineq_rhs(j)) + anorm * xnorm);
      if (slack < -tol) {
        const double scaled = slack / anorm;
        if (scaled < worst) {
          worst = scaled;
          best = j;
        }
      }
    }
    return best;
  }

  bool parked_violated() const {
    const double xnorm = x_.lpNorm<Eigen::Infinity>();
    for (Index j : parked_) {
      const double slack = qp_.ineq_rhs(j) - qp_.ineq_matrix.row(j).dot(x_);
      if (slack < -1e-7 * (1.0 + std::abs(qp_.ineq_rhs(j)) + qp_.ineq_matrix.row(j).norm() * xnorm)) return true;
    }
    return false;
  }

  bool is_active_inequality(Index j) const {
    return std::find(parked_.begin(), parked_.end(), j) != parked_.end() ||
           std::any_of(active_.begin(), active_.end(),
                       [j](const ActiveRow& r) { return !r.equality && r.source == j; });
  }

  void drop(Index l, Vector& u_plus) {
    active_.erase(active_.begin() + l);
    const Index k = u_plus.size();
    Vector reduced(k - 1);
    reduced << u_plus.head(l), u_plus.tail(k - l - 1);
    u_plus = reduced;
  }

  QpStatus add_constraint(ActiveRow row) {
    const Index n = x_.size();
    Vector u_plus(u_.size() + 1);
    u_plus << u_, 0.0;
    const Vector g_inv_n = g_inv_ * row.normal;
    const double scale = row.normal.dot(g_inv_n);
    const double feas_tol = 1e-12 * (1.0 + std::abs(row.rhs));

    while (true) {
      if (++steps_ > max_steps_) return QpStatus::kIterationLimit;
      const Index k = static_cast<Index>(active_.size());
      Vector z = g_inv_n;
      Vector r(k);
      if (k > 0) {
        Matrix normals(n, k);
        for (Index j = 0; j < k; ++j) normals.col(j) = active_[j].normal;
        const Matrix w = g_inv_ * normals;
        const Matrix m = normals.transpose() * w;
        r = m.fullPivLu().solve(w.transpose() * row.normal);
        z.noalias() -= w * r;
      }
      const double s = row.normal.dot(x_) - row.rhs;
      const double zn = z.dot(row.normal);
      // With n rows active every further normal is dependent, whatever rounding says.
      const bool zero_step = k >= n || !(zn > 1e-12 * scale);

      const double noise = 1e-7 * (1.0 + std::abs(row.rhs) + row.normal.norm() * x_.lpNorm<Eigen::Infinity>());
      if (row.equality && zero_step && std::abs(s) <= std::max(feas_tol, noise)) {
        // Linearly dependent and consistent with the current active set.
        return QpStatus::kOptimal;
      }

      double t1 = kInf;
      Index l = -1;
      for (Index j = 0; j < k; ++j) {
        if (active_[j].equality || !(r(j) > 1e-14)) continue;
        const double ratio = u_plus(j) / r(j);
        if (ratio < t1) {
          t1 = ratio;
          l = j;
        }
      }
      const double t2 = zero_step ? kInf : -s / zn;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        // A dependent row violated only by rounding is consistent with the
        // active set; park it instead of declaring infeasibility.
        if (zero_step && !row.equality) {
          // The explicit inverse drifts on degenerate vertices; judge the
          // violation at the exactly re-solved active-set point.
          Vector x_exact, u_exact;
          if (std::abs(s) > noise && solve_active_kkt(x_exact, u_exact) &&
              std::abs(row.normal.dot(x_exact) - row.rhs) <= noise && dual_feasible(u_exact)) {
            x_ = x_exact;
            u_ = u_exact;
            parked_.push_back(row.source);
            return QpStatus::kOptimal;
          }
          if (std::abs(s) <= noise) {
            parked_.push_back(row.source);
            return QpStatus::kOptimal;
          }
        }
        return QpStatus::kInfeasible;
      }

      if (zero_step) {
        u_plus.head(k) -= t * r;
        u_plus(k) += t;
        drop(l, u_plus);
        continue;
      }
      x_ += t * z;
      u_plus.head(k) -= t * r;
      u_plus(k) += t;
      if (t2 <= t1) {
        active_.push_back(std::move(row));
        u_ = u_plus;
        return QpStatus::kOptimal;
      }
      drop(l, u_plus);
    }
  }

  const DenseQp& qp_;
  Matrix g_inv_;
  Vector x_;
  Vector u_ = Vector(0);
  std::vector<ActiveRow> active_;
  std::vector<Index> parked_;
  int steps_ = 0;
  int max_steps_ = 0;
};

}  // namespace

DenseQpSolution solve_dense_qp(const DenseQp& qp) {
  const Index n = qp.hessian.rows();
  const Matrix eq = qp.eq_matrix.size() == 0 ? Matrix(0, n) : qp.eq_matrix;
  const Vector eq_rhs = qp.eq_matrix.size() == 0 ? Vector(0) : qp.eq_rhs;
  const Matrix in = qp.ineq_matrix.size() == 0 ? Matrix(0, n) : qp.ineq_matrix;
  const Vector in_rhs = qp.ineq_matrix.size() == 0 ? Vector(0) : qp.ineq_rhs;

  // Rows a'x <= u and -a'x <= -u together pin a'x = u; solving them as one
  // equality avoids a degenerate pair in the active set.
  const Index mi = in.rows();
  std::vector<Index> partner(static_cast<std::size_t>(mi), -1);
  for (Index i = 0; i < mi; ++i) {
    if (partner[static_cast<std::size_t>(i)] >= 0) continue;
    const double ai = in.row(i).lpNorm<Eigen::Infinity>();
    if (ai == 0.0) continue;
    for (Index j = i + 1; j < mi; ++j) {
      if (partner[static_cast<std::size_t>(j)] >= 0) continue;
      if ((in.row(i) + in.row(j)).lpNorm<Eigen::Infinity>() > 1e-14 * ai) continue;
      if (std::abs(in_rhs(i) + in_rhs(j)) > 1e-12 * (1.0 + std::abs(in_rhs(i)))) continue;
      partner[static_cast<std::size_t>(i)] = j;
      partner[static_cast<std::size_t>(j)] = i;
      break;
    }
  }
  std::vector<Index> pair_first, single;
  for (Index i = 0; i < mi; ++i) {
    const Index p = partner[static_cast<std::size_t>(i)];
    if (p < 0) {
      single.push_back(i);
    } else if (p > i) {
      pair_first.push_back(i);
    }
  }
  const Index me = eq.rows();
  const Index np = static_cast<Index>(pair_first.size());
  DenseQp reduced;
  reduced.hessian = qp.hessian;
  reduced.linear = qp.linear;
  reduced.eq_matrix.resize(me + np, n);
  reduced.eq_rhs.resize(me + np);
  reduced.eq_matrix.topRows(me) = eq;
  reduced.eq_rhs.head(me) = eq_rhs;
  for (Index k = 0; k < np; ++k) {
    reduced.eq_matrix.row(me + k) = in.row(pair_first[static_cast<std::size_t>(k)]);
    reduced.eq_rhs(me + k) = in_rhs(pair_first[static_cast<std::size_t>(k)]);
  }
  const Index ns = static_cast<Index>(single.size());
  reduced.ineq_matrix.resize(ns, n);
  reduced.ineq_rhs.resize(ns);
  for (Index k = 0; k < ns; ++k) {
    reduced.ineq_matrix.row(k) = in.row(single[static_cast<std::size_t>(k)]);
    reduced.ineq_rhs(k) = in_rhs(single[static_cast<std::size_t>(k)]);
  }

  DenseQpSolution r = DualActiveSet(reduced).run();
  if (np == 0) return r;
  DenseQpSolution out;
  out.x = r.x;
  out.status = r.status;
  out.iterations = r.iterations;
  out.eq_multipliers = r.eq_multipliers.size() > 0 ? Vector(r.eq_multipliers.head(me)) : Vector(Vector::Zero(me));
  out.ineq_multipliers = Vector::Zero(mi);
  if (r.ineq_multipliers.size() == ns) {
    for (Index k = 0; k < ns; ++k) out.ineq_multipliers(single[static_cast<std::size_t>(k)]) = r.ineq_multipliers(k);
  }
  if (r.eq_multipliers.size() == me + np) {
    for (Index k = 0; k < np; ++k) {
      const Index i = pair_first[static_cast<std::size_t>(k)];
      const double nu = r.eq_multipliers(me + k);
      out.ineq_multipliers(i) = std::max(nu, 0.0);
      out.ineq_multipliers(partner[static_cast<std::size_t>(i)]) = std::max(-nu, 0.0);
    }
  }
  return out;
}

}  // namespace distopt
