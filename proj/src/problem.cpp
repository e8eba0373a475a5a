#include "distopt/problem.hpp"

#include <sstream>

namespace distopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSolverFailure: return "solver failure";
    case ErrorCode::kSingular: return "singular system";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

namespace {

double fd_step(double xj) { return 1e-6 * (1.0 + std::abs(xj)); }

// Central differences of a vector map, one column per coordinate.
template <typename F>
Matrix central_difference_jacobian(const F& map, const Vector& x, Index rows) {
  Matrix jac(rows, x.size());
  Vector xp = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x(j));
    xp(j) = x(j) + h;
    const Vector fp = map(xp);
    xp(j) = x(j) - h;
    const Vector fm = map(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace

Matrix SmoothFunction::hessian_at(const Vector& x) const {
  if (hessian) return hessian(x);
  Matrix h = central_difference_jacobian(gradient, x, x.size());
  return 0.5 * (h + h.transpose());
}

SmoothFunction SmoothFunction::quadratic(Matrix q, Vector c, double offset) {
  SmoothFunction f;
  f.value = [q, c, offset](const Vector& x) { return 0.5 * x.dot(q * x) + c.dot(x) + offset; };
  f.gradient = [q, c](const Vector& x) -> Vector { return q * x + c; };
  f.hessian = [q](const Vector&) -> Matrix { return q; };
  return f;
}

SmoothFunction SmoothFunction::zero(Index dim) {
  return quadratic(Matrix::Zero(dim, dim), Vector::Zero(dim));
}

Vector ConstraintFunction::value_at(const Vector& x) const {
  if (count == 0) return Vector(0);
  return value(x);
}

Matrix ConstraintFunction::jacobian_at(const Vector& x) const {
  if (count == 0) return Matrix(0, x.size());
  return jacobian(x);
}

Matrix ConstraintFunction::weighted_hessian_at(const Vector& x, const Vector& weights) const {
  if (count == 0) return Matrix::Zero(x.size(), x.size());
  if (weighted_hessian) return weighted_hessian(x, weights);
  auto weighted_gradient = [&](const Vector& z) -> Vector { return jacobian(z).transpose() * weights; };
  Matrix h = central_difference_jacobian(weighted_gradient, x, x.size());
  return 0.5 * (h + h.transpose());
}

ConstraintFunction ConstraintFunction::none() { return ConstraintFunction{}; }

ConstraintFunction ConstraintFunction::linear(Matrix d_matrix, Vector d_vector) {
  ConstraintFunction c;
  c.count = d_matrix.rows();
  c.value = [d_matrix, d_vector](const Vector& x) -> Vector { return d_matrix * x - d_vector; };
  c.jacobian = [d_matrix](const Vector&) -> Matrix { return d_matrix; };
  c.weighted_hessian = [](const Vector& x, const Vector&) -> Matrix {
    return Matrix::Zero(x.size(), x.size());
  };
  return c;
}

ConstraintFunction ConstraintFunction::stack(std::vector<ConstraintFunction> parts) {
  std::erase_if(parts, [](const ConstraintFunction& p) { return p.count == 0; });
  if (parts.empty()) return none();
  if (parts.size() == 1) return parts.front();
  ConstraintFunction c;
  for (const auto& p : parts) c.count += p.count;
  c.value = [parts, total = c.count](const Vector& x) -> Vector {
    Vector v(total);
    Index row = 0;
    for (const auto& p : parts) {
      v.segment(row, p.count) = p.value(x);
      row += p.count;
    }
    return v;
  };
  c.jacobian = [parts, total = c.count](const Vector& x) -> Matrix {
    Matrix j(total, x.size());
    Index row = 0;
    for (const auto& p : parts) {
      j.middleRows(row, p.count) = p.jacobian(x);
      row += p.count;
    }
    return j;
  };
  c.weighted_hessian = [parts](const Vector& x, const Vector& w) -> Matrix {
    Matrix h = Matrix::Zero(x.size(), x.size());
    Index row = 0;
    for (const auto& p : parts) {
      h += p.weighted_hessian_at(x, w.segment(row, p.count));
      row += p.count;
    }
    return h;
  };
  return c;
}

Index PartiallySeparableProblem::total_dim() const {
  Index n = 0;
  for (const auto& s : subsystems) n += s.dim;
  return n;
}

std::vector<Index> PartiallySeparableProblem::dims() const {
  std::vector<Index> d;
  d.reserve(subsystems.size());
  for (const auto& s : subsystems) d.push_back(s.dim);
  return d;
}

std::vector<Index> PartiallySeparableProblem::offsets() const {
  std::vector<Index> off;
  off.reserve(subsystems.size() + 1);
  Index acc = 0;
  for (const auto& s : subsystems) {
    off.push_back(acc);
    acc += s.dim;
  }
  off.push_back(acc);
  return off;
}

std::vector<Vector> PartiallySeparableProblem::split(const Vector& x) const {
  if (x.size() != total_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "primal point has length " + std::to_string(x.size()) + ", expected " +
                    std::to_string(total_dim()));
  }
  std::vector<Vector> parts;
  parts.reserve(subsystems.size());
  Index off = 0;
  for (const auto& s : subsystems) {
    parts.push_back(x.segment(off, s.dim));
    off += s.dim;
  }
  return parts;
}

Vector PartiallySeparableProblem::join(const std::vector<Vector>& parts) const {
  Vector x(total_dim());
  Index off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    x.segment(off, parts[i].size()) = parts[i];
    off += parts[i].size();
  }
  return x;
}

Vector coupling_residual(const PartiallySeparableProblem& problem, const std::vector<Vector>& parts) {
  if (parts.size() != problem.subsystems.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "primal point has wrong number of blocks");
  }
  Vector r = -problem.b;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& s = problem.subsystems[i];
    if (s.coupling.rows() != problem.b.size() || s.coupling.cols() != parts[i].size() ||
        parts[i].size() != s.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "subsystem " + std::to_string(s.id) + ": coupling matrix is " +
                      std::to_string(s.coupling.rows()) + "x" + std::to_string(s.coupling.cols()) +
                      " but block has length " + std::to_string(parts[i].size()) +
                      " and b has length " + std::to_string(problem.b.size()))
          .with_subsystem(s.id);
    }
    r.noalias() += s.coupling * parts[i];
  }
  return r;
}

Vector coupling_residual(const PartiallySeparableProblem& problem, const Vector& x) {
  return coupling_residual(problem, problem.split(x));
}

double evaluate_total_objective(const PartiallySeparableProblem& problem,
                                const std::vector<Vector>& parts) {
  double total = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& s = problem.subsystems[i];
    try {
      total += s.objective.value(parts[i]);
    } catch (Error& e) {
      e.with_subsystem(s.id);
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kSolverFailure,
                  "subsystem " + std::to_string(s.id) + ": objective evaluation failed: " + e.what())
          .with_subsystem(s.id);
    }
  }
  return total;
}

double evaluate_total_objective(const PartiallySeparableProblem& problem, const Vector& x) {
  return evaluate_total_objective(problem, problem.split(x));
}

std::string DiagnosticReport::to_string() const {
  std::ostringstream os;
  for (const auto& f : findings) {
    if (f.subsystem) os << "subsystem " << *f.subsystem << ": ";
    os << f.message << "\n";
  }
  return os.str();
}

namespace {

void structural_checks(const PartiallySeparableProblem& problem, DiagnosticReport& report) {
  const Index m = problem.coupling_rows();
  for (std::size_t i = 0; i < problem.subsystems.size(); ++i) {
    const auto& s = problem.subsystems[i];
    if (s.id != static_cast<Index>(i)) {
      report.findings.push_back({s.id, "subsystem id " + std::to_string(s.id) + " at position " +
                                           std::to_string(i) + " (ids must be 0..N-1)"});
    }
    if (s.dim <= 0) report.findings.push_back({s.id, "dimension must be positive"});
    if (s.coupling.rows() != m) {
      report.findings.push_back({s.id, "coupling matrix has " + std::to_string(s.coupling.rows()) +
                                           " rows, expected " + std::to_string(m)});
    }
    if (s.coupling.cols() != s.dim) {
      report.findings.push_back({s.id, "coupling matrix has " + std::to_string(s.coupling.cols()) +
                                           " columns, expected " + std::to_string(s.dim)});
    }
    if (!s.objective.value || !s.objective.gradient) {
      report.findings.push_back({s.id, "objective value and gradient are required"});
    }
    if (s.inequalities.count > 0 && (!s.inequalities.value || !s.inequalities.jacobian)) {
      report.findings.push_back({s.id, "inequality value and Jacobian are required"});
    }
  }
}

}  // namespace

DiagnosticReport validate_problem(const PartiallySeparableProblem& problem, const Vector& probe) {
  DiagnosticReport report;
  structural_checks(problem, report);
  if (!report.ok()) return report;

  std::vector<Vector> parts;
  if (probe.size() == problem.total_dim()) {
    parts = problem.split(probe);
  } else {
    for (const auto& s : problem.subsystems) parts.push_back(Vector::Zero(s.dim));
  }

  const std::string nonfinite = "evaluator produced non-finite value";
  for (std::size_t i = 0; i < problem.subsystems.size(); ++i) {
    const auto& s = problem.subsystems[i];
    const Vector& x = parts[i];
    try {
      const double f = s.objective.value(x);
      const Vector g = s.objective.gradient(x);
      if (g.size() != s.dim) {
        report.findings.push_back({s.id, "gradient has length " + std::to_string(g.size())});
      } else if (!std::isfinite(f) || !g.allFinite()) {
        report.findings.push_back({s.id, nonfinite});
      } else {
        const Matrix h = s.objective.hessian_at(x);
        if (h.rows() != s.dim || h.cols() != s.dim) {
          report.findings.push_back({s.id, "Hessian has wrong shape"});
        } else if (!h.allFinite()) {
          report.findings.push_back({s.id, nonfinite});
        } else if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, h.norm())) {
          report.findings.push_back({s.id, "Hessian is not symmetric"});
        }
      }
      if (s.inequalities.count > 0) {
        const Vector hv = s.inequalities.value(x);
        const Matrix jv = s.inequalities.jacobian(x);
        if (hv.size() != s.inequalities.count) {
          report.findings.push_back({s.id, "inequality map has length " + std::to_string(hv.size()) +
                                               ", declared " + std::to_string(s.inequalities.count)});
        } else if (jv.rows() != s.inequalities.count || jv.cols() != s.dim) {
          report.findings.push_back({s.id, "inequality Jacobian has wrong shape"});
        } else if (!hv.allFinite() || !jv.allFinite()) {
          report.findings.push_back({s.id, nonfinite});
        }
      }
    } catch (const std::exception& e) {
      report.findings.push_back({s.id, std::string("evaluation threw: ") + e.what()});
    }
  }
  return report;
}

void require_consistent(const PartiallySeparableProblem& problem) {
  DiagnosticReport report;
  structural_checks(problem, report);
  if (!report.ok()) {
    const auto& f = report.findings.front();
    Error err(ErrorCode::kDimensionMismatch,
              (f.subsystem ? "subsystem " + std::to_string(*f.subsystem) + ": " : std::string()) +
                  f.message);
    if (f.subsystem) err.with_subsystem(*f.subsystem);
    throw err;
  }
}

}  // namespace distopt
