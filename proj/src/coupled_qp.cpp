#include "distopt/coupled_qp.hpp"

#include "distopt/error.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <string>

namespace distopt {

Vector solve_kkt(const Matrix& h_block, const Matrix& equality_rows, const Vector& rhs) {
  const Index n = h_block.rows();
  const Index m = equality_rows.rows();
  if (h_block.cols() != n || (m > 0 && equality_rows.cols() != n) || rhs.size() != n + m) {
    throw Error(ErrorCode::kDimensionMismatch, "KKT system blocks have inconsistent sizes");
  }
  Matrix k = Matrix::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = h_block;
  if (m > 0) {
    k.bottomLeftCorner(m, n) = equality_rows;
    k.topRightCorner(n, m) = equality_rows.transpose();
  }
  Eigen::FullPivLU<Matrix> lu(k);
  // Widely spread but nonzero pivots are fine; judge by the solve residual.
  lu.setThreshold(1e-15);
  auto singular = [&]() {
    Eigen::FullPivLU<Matrix> probe(k);
    const Index rank = probe.rank();
    return Error(ErrorCode::kSingular, "KKT matrix is singular: rank " + std::to_string(rank) + " of " +
                                           std::to_string(n + m) + " (rank defect " +
                                           std::to_string(n + m - rank) + ")");
  };
  if (!lu.isInvertible()) throw singular();
  Vector z = lu.solve(rhs);
  z += lu.solve(rhs - k * z);
  const double scale = k.cwiseAbs().maxCoeff() * z.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
  if (!z.allFinite() || (rhs - k * z).lpNorm<Eigen::Infinity>() > 1e-9 * std::max(scale, 1e-300)) throw singular();
  return z;
}

std::vector<Index> independent_rows(const Matrix& c, double threshold) {
  std::vector<Index> kept;
  if (c.rows() == 0) return kept;
  Eigen::ColPivHouseholderQR<Matrix> qr(c.transpose());
  const Matrix& r = qr.matrixQR();
  const Index diag = std::min(r.rows(), r.cols());
  if (diag == 0) return kept;
  const double lead = std::abs(r(0, 0));
  if (lead == 0.0) return kept;
  for (Index k = 0; k < diag; ++k) {
    if (std::abs(r(k, k)) <= threshold * lead) break;
    kept.push_back(qr.colsPermutation().indices()(k));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

CoupledQpSolution solve_aladin_qp(const AladinQpData& data) {
  if (!(data.mu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "coupled QP needs mu > 0");
  const Index m = data.b.size();
  if (data.lambda.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "multiplier and right-hand side differ in length");
  }
  const std::size_t count = data.blocks.size();
  std::vector<Index> offsets(count + 1, 0);
  CoupledQpSolution sol;
  sol.kept_rows.resize(count);
  Index active_total = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const AladinQpBlock& blk = data.blocks[i];
    const Index n = blk.point.size();
    auto fail = [&](const char* what) {
      throw Error(ErrorCode::kDimensionMismatch, "coupled QP block " + std::to_string(i) + ": " + what)
          .with_subsystem(static_cast<int>(i));
    };
    if (blk.hessian.rows() != n || blk.hessian.cols() != n) fail("Hessian has wrong shape");
    if (blk.gradient.size() != n) fail("gradient has wrong length");
    if (blk.coupling.rows() != m || blk.coupling.cols() != n) fail("coupling matrix has wrong shape");
    if (blk.active_jacobian.rows() > 0 && blk.active_jacobian.cols() != n) fail("active Jacobian has wrong width");
    offsets[i + 1] = offsets[i] + n;
    sol.kept_rows[i] = independent_rows(blk.active_jacobian);
    active_total += static_cast<Index>(sol.kept_rows[i].size());
  }
  const Index ny = offsets[count];
  const Index nz = ny + m;
  const Index rows = m + active_total;

  Matrix h = Matrix::Zero(nz, nz);
  Matrix e = Matrix::Zero(rows, nz);
  Vector rhs = Vector::Zero(nz + rows);
  Vector residual = -data.b;
  Index row = m;
  for (std::size_t i = 0; i < count; ++i) {
    const AladinQpBlock& blk = data.blocks[i];
    const Index off = offsets[i];
    const Index n = blk.point.size();
    h.block(off, off, n, n) = blk.hessian;
    rhs.segment(off, n) = -blk.gradient;
    e.block(0, off, m, n) = blk.coupling;
    residual += blk.coupling * blk.point;
    for (Index j : sol.kept_rows[i]) {
      e.block(row, off, 1, n) = blk.active_jacobian.row(j);
      ++row;
    }
  }
  h.bottomRightCorner(m, m).diagonal().setConstant(data.mu);
  e.block(0, ny, m, m) = -Matrix::Identity(m, m);
  rhs.segment(ny, m) = -data.lambda;
  rhs.segment(nz, m) = -residual;

  const Vector z = solve_kkt(h, e, rhs);
  sol.dy.resize(count);
  sol.kappa_qp.resize(count);
  row = nz + m;
  for (std::size_t i = 0; i < count; ++i) {
    const Index n = data.blocks[i].point.size();
    sol.dy[i] = z.segment(offsets[i], n);
    sol.kappa_qp[i] = Vector::Zero(data.blocks[i].active_jacobian.rows());
    for (Index j : sol.kept_rows[i]) sol.kappa_qp[i](j) = z(row++);
  }
  sol.slack = z.segment(ny, m);
  sol.lambda_qp = z.segment(nz, m);
  return sol;
}

std::vector<Vector> solve_admm_qp(const std::vector<Matrix>& coupling, const std::vector<Vector>& y,
                                  const std::vector<Vector>& lambda_plus, double rho, const Vector& b) {
  if (!(rho > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ADMM coordinator QP needs rho > 0");
  const std::size_t count = coupling.size();
  if (y.size() != count || lambda_plus.size() != count) {
    throw Error(ErrorCode::kDimensionMismatch, "ADMM coordinator QP inputs differ in subsystem count");
  }
  const Index m = b.size();
  std::vector<Index> offsets(count + 1, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const Index n = y[i].size();
    if (coupling[i].rows() != m || coupling[i].cols() != n || lambda_plus[i].size() != m) {
      throw Error(ErrorCode::kDimensionMismatch, "ADMM coordinator QP block " + std::to_string(i) +
                                                     " has inconsistent sizes")
          .with_subsystem(static_cast<int>(i));
    }
    offsets[i + 1] = offsets[i] + n;
  }
  const Index n = offsets[count];
  Matrix h = Matrix::Zero(n, n);
  Matrix a(m, n);
  Vector g(n);
  Vector target = b;
  for (std::size_t i = 0; i < count; ++i) {
    const Index off = offsets[i];
    const Index ni = y[i].size();
    h.block(off, off, ni, ni) = rho * coupling[i].transpose() * coupling[i];
    a.middleCols(off, ni) = coupling[i];
    // The multiplier enters with a minus sign: the displayed plus sign makes the
    // iteration diverge whenever the local costs are not symmetric.
    g.segment(off, ni) = -coupling[i].transpose() * lambda_plus[i];
    target -= coupling[i] * y[i];
  }
  h.diagonal().array() += 1e-10;

  // Redundant coupling rows would make the KKT matrix singular.
  const std::vector<Index> rows = independent_rows(a);
  Matrix e(static_cast<Index>(rows.size()), n);
  Vector rhs(n + static_cast<Index>(rows.size()));
  rhs.head(n) = -g;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    e.row(static_cast<Index>(k)) = a.row(rows[k]);
    rhs(n + static_cast<Index>(k)) = target(rows[k]);
  }
  const Vector z = solve_kkt(h, e, rhs);
  const Vector d = z.head(n);
  if ((a * d - target).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + target.lpNorm<Eigen::Infinity>())) {
    throw Error(ErrorCode::kInfeasible, "coupling system sum A_i x_i = b is inconsistent");
  }
  std::vector<Vector> x(count);
  for (std::size_t i = 0; i < count; ++i) x[i] = y[i] + d.segment(offsets[i], y[i].size());
  return x;
}

}  // namespace distopt
