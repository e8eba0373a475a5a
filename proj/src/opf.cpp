#include "distopt/opf.hpp"

#include "distopt/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace distopt::opf {

Injections ac_injections(const Matrix& g, const Matrix& b, const Vector& v, const Vector& theta) {
  const Index n = v.size();
  Injections out{Vector::Zero(n), Vector::Zero(n)};
  for (Index l = 0; l < n; ++l) {
    double p = 0.0;
    double q = 0.0;
    for (Index k = 0; k < n; ++k) {
      if (g(l, k) == 0.0 && b(l, k) == 0.0) continue;
      const double t = theta(l) - theta(k);
      const double c = std::cos(t);
      const double s = std::sin(t);
      p += v(k) * (g(l, k) * c + b(l, k) * s);
      q += v(k) * (g(l, k) * s - b(l, k) * c);
    }
    out.p(l) = v(l) * p;
    out.q(l) = v(l) * q;
  }
  return out;
}

Injections ac_injections(const PowerNetwork& network, const Vector& v, const Vector& theta) {
  return ac_injections(network.conductance(), network.susceptance(), v, theta);
}

Matrix ac_jacobian(const Matrix& g, const Matrix& b, const Vector& v, const Vector& theta) {
  const Index n = v.size();
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  for (Index l = 0; l < n; ++l) {
    for (Index k = 0; k < n; ++k) {
      if (g(l, k) == 0.0 && b(l, k) == 0.0) continue;
      const double t = theta(l) - theta(k);
      const double c = std::cos(t);
      const double s = std::sin(t);
      const double pc = g(l, k) * c + b(l, k) * s;  // p coefficient
      const double qc = g(l, k) * s - b(l, k) * c;  // q coefficient
      // d/dv_l of v_l * v_k * coef (twice for k == l)
      j(l, l) += v(k) * pc;
      j(n + l, l) += v(k) * qc;
      j(l, k) += v(l) * pc;
      j(n + l, k) += v(l) * qc;
      if (k == l) continue;
      const double dp = v(l) * v(k) * (-g(l, k) * s + b(l, k) * c);
      const double dq = v(l) * v(k) * (g(l, k) * c + b(l, k) * s);
      j(l, n + l) += dp;
      j(l, n + k) -= dp;
      j(n + l, n + l) += dq;
      j(n + l, n + k) -= dq;
    }
  }
  return j;
}

Matrix ac_jacobian(const PowerNetwork& network, const Vector& v, const Vector& theta) {
  return ac_jacobian(network.conductance(), network.susceptance(), v, theta);
}

Vector dc_power_flow(const Matrix& b, const Vector& theta, std::vector<std::string>* warnings) {
  const Index n = theta.size();
  Vector p = Vector::Zero(n);
  for (Index l = 0; l < n; ++l) {
    for (Index k = 0; k < n; ++k) {
      if (k != l) p(l) += b(l, k) * (theta(l) - theta(k));
    }
    if (warnings && std::abs(b.row(l).sum()) > 1e-9 * (1.0 + b.row(l).cwiseAbs().sum())) {
      warnings->push_back("susceptance row " + std::to_string(l + 1) + " does not sum to zero");
    }
  }
  return p;
}

Vector dc_power_flow(const PowerNetwork& network, const Vector& theta) {
  return dc_power_flow(network.susceptance(), theta);
}

std::pair<double, double> branch_flow(double g, double b, double vl, double vk, double theta_lk,
                                      FlowConvention convention) {
  const double c = std::cos(theta_lk);
  const double s = std::sin(theta_lk);
  const double p = vl * vl * g - vl * vk * (g * c + b * s);
  const double q_cross = vl * vk * (b * c - g * s);
  const double q = convention == FlowConvention::kPhysical ? -vl * vl * b + q_cross : -vl * vl * b - q_cross;
  return {p, q};
}

std::vector<LineFlow> line_flows(const PowerNetwork& network, const Vector& v, const Vector& theta,
                                 FlowConvention convention) {
  std::vector<LineFlow> out;
  for (const Line& l : network.lines) {
    LineFlow f;
    const double t = theta(l.from) - theta(l.to);
    std::tie(f.p_from, f.q_from) = branch_flow(l.g, l.b, v(l.from), v(l.to), t, convention);
    std::tie(f.p_to, f.q_to) = branch_flow(l.g, l.b, v(l.to), v(l.from), -t, convention);
    if (std::isfinite(l.s_max)) {
      f.slack_from = l.s_max - std::hypot(f.p_from, f.q_from);
      f.slack_to = l.s_max - std::hypot(f.p_to, f.q_to);
    }
    out.push_back(f);
  }
  return out;
}

double generation_cost(const PowerNetwork& network, const Vector& p) {
  double c = 0.0;
  for (Index i = 0; i < network.num_generators(); ++i) {
    const Generator& g = network.generators[static_cast<std::size_t>(i)];
    c += g.alpha * p(i) * p(i) + g.beta * p(i) + g.gamma;
  }
  return c;
}

namespace {

// Series branch of a (sub)network, with apparent-power limits at either end.
struct Branch {
  Index a = 0;
  Index b = 0;
  double g = 0.0;
  double bs = 0.0;
  double s_max = kInf;
  double p_max = kInf;
  bool limit_a = true;
  bool limit_b = true;
};

void local_matrices(Index nodes, const std::vector<Branch>& branches, Matrix& g, Matrix& b) {
  g = Matrix::Zero(nodes, nodes);
  b = Matrix::Zero(nodes, nodes);
  for (const Branch& br : branches) {
    g(br.a, br.b) -= br.g;
    g(br.b, br.a) -= br.g;
    g(br.a, br.a) += br.g;
    g(br.b, br.b) += br.g;
    b(br.a, br.b) -= br.bs;
    b(br.b, br.a) -= br.bs;
    b(br.a, br.a) += br.bs;
    b(br.b, br.b) += br.bs;
  }
}

// Squared apparent power leaving node l over a branch, and its gradient with
// respect to (v_l, v_k, theta_l, theta_k).
double flow_squared(const Branch& br, double vl, double vk, double t, double grad[4]) {
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double g = br.g;
  const double b = br.bs;
  const double p = vl * vl * g - vl * vk * (g * c + b * s);
  const double q = -vl * vl * b + vl * vk * (b * c - g * s);
  const double dp[4] = {2.0 * vl * g - vk * (g * c + b * s), -vl * (g * c + b * s),
                        -vl * vk * (-g * s + b * c), vl * vk * (-g * s + b * c)};
  const double dq[4] = {-2.0 * vl * b + vk * (b * c - g * s), vl * (b * c - g * s),
                        vl * vk * (-b * s - g * c), -vl * vk * (-b * s - g * c)};
  for (int i = 0; i < 4; ++i) grad[i] = 2.0 * p * dp[i] + 2.0 * q * dq[i];
  return p * p + q * q;
}

// Accumulates linear rows a'x <= rhs.
struct LinearRows {
  std::vector<std::pair<std::vector<std::pair<Index, double>>, double>> rows;

  void add(std::vector<std::pair<Index, double>> coeffs, double rhs) { rows.emplace_back(std::move(coeffs), rhs); }
  void bounds(Index var, double lo, double hi) {
    if (std::isfinite(hi)) add({{var, 1.0}}, hi);
    if (std::isfinite(lo)) add({{var, -1.0}}, -lo);
  }
  void equal(Index var, double value) {
    add({{var, 1.0}}, value);
    add({{var, -1.0}}, -value);
  }
  ConstraintFunction build(Index dim) const {
    Matrix d = Matrix::Zero(static_cast<Index>(rows.size()), dim);
    Vector rhs(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [var, coef] : rows[r].first) d(static_cast<Index>(r), var) += coef;
      rhs(static_cast<Index>(r)) = rows[r].second;
    }
    return ConstraintFunction::linear(d, rhs);
  }
};

// Everything needed to build one region (or one stage) subsystem.
struct RegionSpec {
  FlowModel model = FlowModel::kAc;
  Index nodes = 0;
  std::vector<Branch> branches;
  // Per node: demand and voltage bounds (aux nodes have zero demand, no bounds).
  std::vector<double> pd, qd, vmin, vmax;
  std::vector<std::vector<Index>> gens_at_node;  // local generator indices
  std::vector<Index> aux_node;                   // node index of each aux entry
  std::vector<const Generator*> gens;
  Index reference_node = -1;
  // Multistage increments: one (dp, dq) pair per generator when set.
  bool increments = false;
  std::vector<double> ramp_down, ramp_up;
};

RegionLayout make_layout(const RegionSpec& spec) {
  RegionLayout lay;
  lay.model = spec.model;
  lay.nodes = spec.nodes;
  const Index ng = static_cast<Index>(spec.gens.size());
  const Index na = static_cast<Index>(spec.aux_node.size());
  Index off = 0;
  if (spec.model == FlowModel::kAc) {
    lay.v = off;
    off += spec.nodes;
  }
  lay.theta = off;
  off += spec.nodes;
  lay.p = off;
  off += ng;
  if (spec.model == FlowModel::kAc) {
    lay.q = off;
    off += ng;
  }
  lay.p_aux = off;
  off += na;
  if (spec.model == FlowModel::kAc) {
    lay.q_aux = off;
    off += na;
  }
  lay.extra = off;
  if (spec.increments) off += (spec.model == FlowModel::kAc ? 2 : 1) * ng;
  lay.dim = off;
  return lay;
}

// Net scheduled injection at each node as a linear function of the variables.
Vector scheduled(const RegionSpec& spec, const RegionLayout& lay, const Vector& x, bool reactive) {
  Vector inj(spec.nodes);
  for (Index l = 0; l < spec.nodes; ++l) {
    inj(l) = reactive ? -spec.qd[static_cast<std::size_t>(l)] : -spec.pd[static_cast<std::size_t>(l)];
    for (Index gi : spec.gens_at_node[static_cast<std::size_t>(l)]) inj(l) += x((reactive ? lay.q : lay.p) + gi);
  }
  for (std::size_t a = 0; a < spec.aux_node.size(); ++a) {
    inj(spec.aux_node[a]) += x((reactive ? lay.q_aux : lay.p_aux) + static_cast<Index>(a));
  }
  return inj;
}

Matrix scheduled_jacobian(const RegionSpec& spec, const RegionLayout& lay, bool reactive) {
  Matrix j = Matrix::Zero(spec.nodes, lay.dim);
  for (Index l = 0; l < spec.nodes; ++l) {
    for (Index gi : spec.gens_at_node[static_cast<std::size_t>(l)]) j(l, (reactive ? lay.q : lay.p) + gi) = 1.0;
  }
  for (std::size_t a = 0; a < spec.aux_node.size(); ++a) {
    j(spec.aux_node[a], (reactive ? lay.q_aux : lay.p_aux) + static_cast<Index>(a)) = 1.0;
  }
  return j;
}

Subsystem build_region(const RegionSpec& spec, RegionLayout& layout_out, Index id, const std::string& name) {
  const RegionLayout lay = make_layout(spec);
  layout_out = lay;
  const Index nn = spec.nodes;
  const Index ng = static_cast<Index>(spec.gens.size());
  const Index dim = lay.dim;
  Matrix gm, bm;
  local_matrices(nn, spec.branches, gm, bm);

  Subsystem s;
  s.id = id;
  s.dim = dim;
  s.name = name;

  // Cost sum alpha p^2 + beta p + gamma (+ ||du||^2).
  Matrix q = Matrix::Zero(dim, dim);
  Vector c = Vector::Zero(dim);
  double offset = 0.0;
  for (Index i = 0; i < ng; ++i) {
    const Generator& g = *spec.gens[static_cast<std::size_t>(i)];
    q(lay.p + i, lay.p + i) = 2.0 * g.alpha;
    c(lay.p + i) = g.beta;
    offset += g.gamma;
  }
  for (Index k = lay.extra; k < dim; ++k) q(k, k) = 2.0;
  s.objective = SmoothFunction::quadratic(q, c, offset);

  LinearRows lin;
  for (Index i = 0; i < ng; ++i) {
    const Generator& g = *spec.gens[static_cast<std::size_t>(i)];
    lin.bounds(lay.p + i, g.p_min, g.p_max);
    if (spec.model == FlowModel::kAc) lin.bounds(lay.q + i, g.q_min, g.q_max);
  }
  if (spec.model == FlowModel::kAc) {
    for (Index l = 0; l < nn; ++l) {
      lin.bounds(lay.v + l, spec.vmin[static_cast<std::size_t>(l)], spec.vmax[static_cast<std::size_t>(l)]);
    }
  }
  if (spec.reference_node >= 0) {
    if (spec.model == FlowModel::kAc) lin.equal(lay.v + spec.reference_node, 1.0);
    lin.equal(lay.theta + spec.reference_node, 0.0);
  }
  if (spec.increments) {
    for (Index i = 0; i < ng; ++i) {
      lin.bounds(lay.extra + i, spec.ramp_down[static_cast<std::size_t>(i)],
                 spec.ramp_up[static_cast<std::size_t>(i)]);
    }
  }

  std::vector<ConstraintFunction> parts;
  if (spec.model == FlowModel::kAc) {
    // Power flow F = scheduled - injections, as F <= 0 and -F <= 0.
    const Matrix jp = scheduled_jacobian(spec, lay, false);
    const Matrix jq = scheduled_jacobian(spec, lay, true);
    ConstraintFunction flow;
    flow.count = 4 * nn;
    flow.value = [spec, lay, gm, bm, nn](const Vector& x) -> Vector {
      const Injections inj = ac_injections(gm, bm, x.segment(lay.v, nn), x.segment(lay.theta, nn));
      const Vector fp = scheduled(spec, lay, x, false) - inj.p;
      const Vector fq = scheduled(spec, lay, x, true) - inj.q;
      Vector out(4 * nn);
      out << fp, fq, -fp, -fq;
      return out;
    };
    flow.jacobian = [lay, gm, bm, nn, jp, jq](const Vector& x) -> Matrix {
      const Matrix ja = ac_jacobian(gm, bm, x.segment(lay.v, nn), x.segment(lay.theta, nn));
      Matrix f(2 * nn, lay.dim);
      f.topRows(nn) = jp;
      f.bottomRows(nn) = jq;
      f.middleCols(lay.v, nn) -= ja.leftCols(nn);
      f.middleCols(lay.theta, nn) -= ja.rightCols(nn);
      Matrix out(4 * nn, lay.dim);
      out << f, -f;
      return out;
    };
    parts.push_back(flow);

    std::vector<std::pair<std::size_t, bool>> limited;  // branch, at end a
    for (std::size_t k = 0; k < spec.branches.size(); ++k) {
      const Branch& br = spec.branches[k];
      if (!std::isfinite(br.s_max)) continue;
      if (br.limit_a) limited.emplace_back(k, true);
      if (br.limit_b) limited.emplace_back(k, false);
    }
    if (!limited.empty()) {
      const std::vector<Branch> branches = spec.branches;
      ConstraintFunction lim;
      lim.count = static_cast<Index>(limited.size());
      auto eval = [branches, limited, lay](const Vector& x, Matrix* jac) {
        Vector h(static_cast<Index>(limited.size()));
        if (jac) *jac = Matrix::Zero(h.size(), lay.dim);
        for (std::size_t r = 0; r < limited.size(); ++r) {
          const Branch& br = branches[limited[r].first];
          const Index l = limited[r].second ? br.a : br.b;
          const Index k = limited[r].second ? br.b : br.a;
          double grad[4];
          const double s2 = flow_squared(br, x(lay.v + l), x(lay.v + k), x(lay.theta + l) - x(lay.theta + k), grad);
          const Index row = static_cast<Index>(r);
          h(row) = s2 - br.s_max * br.s_max;
          if (jac) {
            (*jac)(row, lay.v + l) += grad[0];
            (*jac)(row, lay.v + k) += grad[1];
            (*jac)(row, lay.theta + l) += grad[2];
            (*jac)(row, lay.theta + k) += grad[3];
          }
        }
        return h;
      };
      lim.value = [eval](const Vector& x) -> Vector { return eval(x, nullptr); };
      lim.jacobian = [eval](const Vector& x) -> Matrix {
        Matrix j;
        eval(x, &j);
        return j;
      };
      parts.push_back(lim);
    }
  } else {
    // F = scheduled - sum_k B_lk (theta_l - theta_k), linear.
    Matrix f = scheduled_jacobian(spec, lay, false);
    Vector rhs(nn);
    for (Index l = 0; l < nn; ++l) rhs(l) = spec.pd[static_cast<std::size_t>(l)];
    // sum_k B_lk (theta_l - theta_k) = -(B theta)_l for Laplacian B.
    f.middleCols(lay.theta, nn) += bm;
    Matrix d(2 * nn, dim);
    d << f, -f;
    Vector dv(2 * nn);
    dv << rhs, -rhs;
    parts.push_back(ConstraintFunction::linear(d, dv));
    for (const Branch& br : spec.branches) {
      if (!std::isfinite(br.p_max)) continue;
      // flow a->b = -bs (theta_a - theta_b)
      lin.add({{lay.theta + br.a, -br.bs}, {lay.theta + br.b, br.bs}}, br.p_max);
      lin.add({{lay.theta + br.a, br.bs}, {lay.theta + br.b, -br.bs}}, br.p_max);
    }
  }
  parts.push_back(lin.build(dim));
  s.inequalities = ConstraintFunction::stack(parts);
  return s;
}

Vector flat_start(const RegionLayout& lay) {
  Vector x = Vector::Zero(lay.dim);
  if (lay.v >= 0) x.segment(lay.v, lay.nodes).setOnes();
  return x;
}

}  // namespace

CentralModel build_centralized_acopf(const PowerNetwork& net) {
  validate(net);
  if (net.generators.empty()) throw Error(ErrorCode::kInvalidArgument, "AC-OPF needs at least one generator");
  const Index n = net.num_buses();
  const Index ng = net.num_generators();
  CentralModel m;
  m.layout = {0, n, 2 * n, 2 * n + ng, 2 * n + 2 * ng};
  const CentralLayout lay = m.layout;
  const Index dim = lay.dim;
  const Matrix gm = net.conductance();
  const Matrix bm = net.susceptance();

  Matrix q = Matrix::Zero(dim, dim);
  Vector c = Vector::Zero(dim);
  double offset = 0.0;
  Matrix sched = Matrix::Zero(2 * n, dim);
  Vector demand(2 * n);
  for (Index i = 0; i < ng; ++i) {
    const Generator& g = net.generators[static_cast<std::size_t>(i)];
    q(lay.p + i, lay.p + i) = 2.0 * g.alpha;
    c(lay.p + i) = g.beta;
    offset += g.gamma;
    sched(g.bus, lay.p + i) = 1.0;
    sched(n + g.bus, lay.q + i) = 1.0;
  }
  for (Index l = 0; l < n; ++l) {
    demand(l) = net.buses[static_cast<std::size_t>(l)].p_demand;
    demand(n + l) = net.buses[static_cast<std::size_t>(l)].q_demand;
  }
  m.nlp.dim = dim;
  m.nlp.objective = SmoothFunction::quadratic(q, c, offset);

  ConstraintFunction eq;
  eq.count = 2 * n + 2;
  eq.value = [gm, bm, sched, demand, n, lay](const Vector& x) -> Vector {
    const Injections inj = ac_injections(gm, bm, x.segment(lay.v, n), x.segment(lay.theta, n));
    Vector out(2 * n + 2);
    out.head(2 * n) = sched * x - demand;
    out.head(n) -= inj.p;
    out.segment(n, n) -= inj.q;
    out(2 * n) = x(lay.v) - 1.0;
    out(2 * n + 1) = x(lay.theta);
    return out;
  };
  eq.jacobian = [gm, bm, sched, n, lay](const Vector& x) -> Matrix {
    const Matrix ja = ac_jacobian(gm, bm, x.segment(lay.v, n), x.segment(lay.theta, n));
    Matrix out = Matrix::Zero(2 * n + 2, lay.dim);
    out.topRows(2 * n) = sched;
    out.block(0, lay.v, 2 * n, n) -= ja.leftCols(n);
    out.block(0, lay.theta, 2 * n, n) -= ja.rightCols(n);
    out(2 * n, lay.v) = 1.0;
    out(2 * n + 1, lay.theta) = 1.0;
    return out;
  };
  m.nlp.equalities = eq;

  LinearRows lin;
  for (Index i = 0; i < ng; ++i) {
    const Generator& g = net.generators[static_cast<std::size_t>(i)];
    lin.bounds(lay.p + i, g.p_min, g.p_max);
    lin.bounds(lay.q + i, g.q_min, g.q_max);
  }
  for (Index l = 0; l < n; ++l) {
    lin.bounds(lay.v + l, net.buses[static_cast<std::size_t>(l)].v_min, net.buses[static_cast<std::size_t>(l)].v_max);
  }
  std::vector<ConstraintFunction> parts{lin.build(dim)};
  std::vector<Line> limited;
  for (const Line& l : net.lines) {
    if (std::isfinite(l.s_max)) limited.push_back(l);
  }
  if (!limited.empty()) {
    ConstraintFunction lim;
    lim.count = 2 * static_cast<Index>(limited.size());
    auto eval = [limited, lay](const Vector& x, Matrix* jac) {
      Vector h(2 * static_cast<Index>(limited.size()));
      if (jac) *jac = Matrix::Zero(h.size(), lay.dim);
      for (std::size_t r = 0; r < limited.size(); ++r) {
        const Line& line = limited[r];
        for (int end = 0; end < 2; ++end) {
          const Index l = end == 0 ? line.from : line.to;
          const Index k = end == 0 ? line.to : line.from;
          const double vl = x(lay.v + l);
          const double vk = x(lay.v + k);
          const double t = x(lay.theta + l) - x(lay.theta + k);
          const auto [p, qf] = branch_flow(line.g, line.b, vl, vk, t);
          const Index row = 2 * static_cast<Index>(r) + end;
          h(row) = p * p + qf * qf - line.s_max * line.s_max;
          if (jac) {
            const double cs = std::cos(t);
            const double sn = std::sin(t);
            const double g = line.g;
            const double b = line.b;
            const double dp[4] = {2.0 * vl * g - vk * (g * cs + b * sn), -vl * (g * cs + b * sn),
                                  -vl * vk * (-g * sn + b * cs), vl * vk * (-g * sn + b * cs)};
            const double dq[4] = {-2.0 * vl * b + vk * (b * cs - g * sn), vl * (b * cs - g * sn),
                                  vl * vk * (-b * sn - g * cs), -vl * vk * (-b * sn - g * cs)};
            const Index cols[4] = {lay.v + l, lay.v + k, lay.theta + l, lay.theta + k};
            for (int i = 0; i < 4; ++i) (*jac)(row, cols[i]) += 2.0 * p * dp[i] + 2.0 * qf * dq[i];
          }
        }
      }
      return h;
    };
    lim.value = [eval](const Vector& x) -> Vector { return eval(x, nullptr); };
    lim.jacobian = [eval](const Vector& x) -> Matrix {
      Matrix j;
      eval(x, &j);
      return j;
    };
    parts.push_back(lim);
  }
  m.nlp.inequalities = ConstraintFunction::stack(parts);
  m.initial = Vector::Zero(dim);
  m.initial.segment(lay.v, n).setOnes();
  return m;
}

DcModel build_dcopf(const PowerNetwork& net) {
  validate(net);
  if (net.generators.empty()) throw Error(ErrorCode::kInvalidArgument, "DC-OPF needs at least one generator");
  const Index n = net.num_buses();
  const Index ng = net.num_generators();
  DcModel out;
  CentralModel& m = out.model;
  m.layout = {-1, 0, n, -1, n + ng};
  const Index dim = n + ng;
  const Matrix bm = net.susceptance();

  DenseQp& qp = out.qp;
  qp.hessian = Matrix::Zero(dim, dim);
  qp.linear = Vector::Zero(dim);
  for (Index i = 0; i < ng; ++i) {
    const Generator& g = net.generators[static_cast<std::size_t>(i)];
    qp.hessian(n + i, n + i) = 2.0 * g.alpha;
    qp.linear(n + i) = g.beta;
    out.constant += g.gamma;
  }
  // u - d + B theta = 0 and theta_1 = 0.
  qp.eq_matrix = Matrix::Zero(n + 1, dim);
  qp.eq_rhs = Vector::Zero(n + 1);
  qp.eq_matrix.block(0, 0, n, n) = bm;
  for (Index i = 0; i < ng; ++i) qp.eq_matrix(net.generators[static_cast<std::size_t>(i)].bus, n + i) = 1.0;
  for (Index l = 0; l < n; ++l) qp.eq_rhs(l) = net.buses[static_cast<std::size_t>(l)].p_demand;
  qp.eq_matrix(n, 0) = 1.0;

  LinearRows lin;
  for (Index i = 0; i < ng; ++i) {
    const Generator& g = net.generators[static_cast<std::size_t>(i)];
    lin.bounds(n + i, g.p_min, g.p_max);
  }
  for (const Line& l : net.lines) {
    if (!std::isfinite(l.p_max)) continue;
    lin.add({{l.from, -l.b}, {l.to, l.b}}, l.p_max);
    lin.add({{l.from, l.b}, {l.to, -l.b}}, l.p_max);
  }
  const ConstraintFunction ineq = lin.build(dim);
  qp.ineq_matrix = ineq.jacobian_at(Vector::Zero(dim));
  qp.ineq_rhs = -ineq.value_at(Vector::Zero(dim));

  m.nlp.dim = dim;
  m.nlp.objective = SmoothFunction::quadratic(qp.hessian, qp.linear, out.constant);
  m.nlp.equalities = ConstraintFunction::linear(qp.eq_matrix, qp.eq_rhs);
  m.nlp.inequalities = ineq;
  m.initial = Vector::Zero(dim);
  return out;
}

Partition partition_network(const PowerNetwork& net, const std::vector<Index>& assignment) {
  validate(net);
  if (static_cast<Index>(assignment.size()) != net.num_buses()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition must assign every bus");
  }
  Partition part;
  part.region_of_bus = assignment;
  Index regions = 0;
  for (Index r : assignment) {
    if (r < 0) throw Error(ErrorCode::kInvalidArgument, "region indices must be nonnegative");
    regions = std::max(regions, r + 1);
  }
  part.regions = regions;
  part.buses_of_region.resize(static_cast<std::size_t>(regions));
  for (Index l = 0; l < net.num_buses(); ++l) part.buses_of_region[static_cast<std::size_t>(assignment[static_cast<std::size_t>(l)])].push_back(l);
  for (Index r = 0; r < regions; ++r) {
    if (part.buses_of_region[static_cast<std::size_t>(r)].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "region " + std::to_string(r + 1) + " has no buses");
    }
  }
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const Line& l = net.lines[k];
    const Index ra = assignment[static_cast<std::size_t>(l.from)];
    const Index rb = assignment[static_cast<std::size_t>(l.to)];
    if (ra == rb) continue;
    const Index line = static_cast<Index>(k);
    part.cut_lines.push_back(line);
    const Index first = static_cast<Index>(part.aux.size());
    part.aux.push_back({line, ra, l.from});
    part.aux.push_back({line, rb, l.to});
    part.pairs.emplace_back(first, first + 1);
  }
  return part;
}

namespace {

DistributedModel build_distributed(const PowerNetwork& net, const Partition& part, FlowModel model) {
  validate(net);
  if (static_cast<Index>(part.region_of_bus.size()) != net.num_buses()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition does not match the network");
  }
  if (net.generators.empty()) throw Error(ErrorCode::kInvalidArgument, "OPF needs at least one generator");
  DistributedModel out;
  out.partition = part;
  out.model = model;
  const Index per_cut = model == FlowModel::kAc ? 4 : 2;
  const Index m = per_cut * static_cast<Index>(part.cut_lines.size());
  out.problem.b = Vector::Zero(m);

  std::vector<std::vector<Index>> aux_of_region(static_cast<std::size_t>(part.regions));
  for (std::size_t a = 0; a < part.aux.size(); ++a) {
    aux_of_region[static_cast<std::size_t>(part.aux[a].region)].push_back(static_cast<Index>(a));
  }

  for (Index r = 0; r < part.regions; ++r) {
    const auto& buses = part.buses_of_region[static_cast<std::size_t>(r)];
    const auto& aux = aux_of_region[static_cast<std::size_t>(r)];
    RegionSpec spec;
    spec.model = model;
    spec.nodes = static_cast<Index>(buses.size() + aux.size());
    std::vector<Index> node_of_bus(static_cast<std::size_t>(net.num_buses()), -1);
    for (std::size_t i = 0; i < buses.size(); ++i) {
      node_of_bus[static_cast<std::size_t>(buses[i])] = static_cast<Index>(i);
      const Bus& b = net.buses[static_cast<std::size_t>(buses[i])];
      spec.pd.push_back(b.p_demand);
      spec.qd.push_back(b.q_demand);
      spec.vmin.push_back(b.v_min);
      spec.vmax.push_back(b.v_max);
      if (buses[i] == 0) spec.reference_node = static_cast<Index>(i);
    }
    for (std::size_t i = 0; i < aux.size(); ++i) {
      spec.pd.push_back(0.0);
      spec.qd.push_back(0.0);
      spec.vmin.push_back(-kInf);
      spec.vmax.push_back(kInf);
      spec.aux_node.push_back(static_cast<Index>(buses.size() + i));
    }
    spec.gens_at_node.resize(static_cast<std::size_t>(spec.nodes));
    std::vector<Index> gen_ids;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      const Index node = node_of_bus[static_cast<std::size_t>(net.generators[g].bus)];
      if (node < 0) continue;
      spec.gens_at_node[static_cast<std::size_t>(node)].push_back(static_cast<Index>(spec.gens.size()));
      spec.gens.push_back(&net.generators[g]);
      gen_ids.push_back(static_cast<Index>(g));
    }
    for (const Line& l : net.lines) {
      const Index a = node_of_bus[static_cast<std::size_t>(l.from)];
      const Index b = node_of_bus[static_cast<std::size_t>(l.to)];
      if (a >= 0 && b >= 0) spec.branches.push_back({a, b, l.g, l.b, l.s_max, l.p_max, true, true});
    }
    for (std::size_t i = 0; i < aux.size(); ++i) {
      const AuxNode& an = part.aux[static_cast<std::size_t>(aux[i])];
      const Line& l = net.lines[static_cast<std::size_t>(an.line)];
      const Index bus_node = node_of_bus[static_cast<std::size_t>(an.bus)];
      const Index aux_node = static_cast<Index>(buses.size() + i);
      // Half of a line of admittance y has admittance 2y; limit at the bus end only.
      spec.branches.push_back({bus_node, aux_node, 2.0 * l.g, 2.0 * l.b, l.s_max, l.p_max, true, false});
    }
    RegionLayout lay;
    Subsystem s = build_region(spec, lay, r, "region" + std::to_string(r + 1));
    lay.buses = buses;
    lay.aux = aux;
    lay.generators = gen_ids;

    s.coupling = Matrix::Zero(m, lay.dim);
    for (std::size_t i = 0; i < aux.size(); ++i) {
      const Index a = aux[i];
      const Index cut = a / 2;
      const double sign = (a % 2 == 0) ? 1.0 : -1.0;
      const Index node = static_cast<Index>(buses.size() + i);
      const Index row = per_cut * cut;
      const Index ai = static_cast<Index>(i);
      s.coupling(row, lay.theta + node) = sign;
      s.coupling(row + 1, lay.p_aux + ai) = 1.0;
      if (model == FlowModel::kAc) {
        s.coupling(row + 2, lay.v + node) = sign;
        s.coupling(row + 3, lay.q_aux + ai) = 1.0;
      }
    }
    out.problem.subsystems.push_back(std::move(s));
    out.layouts.push_back(lay);
  }
  std::vector<Vector> init;
  for (const RegionLayout& lay : out.layouts) init.push_back(flat_start(lay));
  out.initial = out.problem.join(init);
  return out;
}

}  // namespace

DistributedModel build_distributed_acopf(const PowerNetwork& network, const Partition& partition) {
  return build_distributed(network, partition, FlowModel::kAc);
}

DistributedModel build_distributed_dcopf(const PowerNetwork& network, const Partition& partition) {
  return build_distributed(network, partition, FlowModel::kDc);
}

OperatingPoint merge_solution(const DistributedModel& model, const Vector& x) {
  const Index n = static_cast<Index>(model.partition.region_of_bus.size());
  Index ng = 0;
  for (const RegionLayout& lay : model.layouts) ng += static_cast<Index>(lay.generators.size());
  const std::vector<Vector> parts = model.problem.split(x);
  OperatingPoint pt{Vector::Ones(n), Vector::Zero(n), Vector::Zero(ng), Vector::Zero(ng)};
  for (std::size_t r = 0; r < model.layouts.size(); ++r) {
    const RegionLayout& lay = model.layouts[r];
    const Vector& xr = parts[r];
    for (std::size_t i = 0; i < lay.buses.size(); ++i) {
      const Index bus = lay.buses[i];
      if (lay.v >= 0) pt.v(bus) = xr(lay.v + static_cast<Index>(i));
      pt.theta(bus) = xr(lay.theta + static_cast<Index>(i));
    }
    for (std::size_t i = 0; i < lay.generators.size(); ++i) {
      pt.p(lay.generators[i]) = xr(lay.p + static_cast<Index>(i));
      if (lay.q >= 0) pt.q(lay.generators[i]) = xr(lay.q + static_cast<Index>(i));
    }
  }
  return pt;
}

OperatingPoint extract_central(const CentralModel& model, const Vector& x) {
  const CentralLayout& lay = model.layout;
  const Index n = lay.p - lay.theta;
  const Index ng = (lay.q >= 0 ? lay.q : lay.dim) - lay.p;
  OperatingPoint pt;
  pt.v = lay.v >= 0 ? Vector(x.segment(lay.v, n)) : Vector(Vector::Ones(n));
  pt.theta = x.segment(lay.theta, n);
  pt.p = x.segment(lay.p, ng);
  pt.q = lay.q >= 0 ? Vector(x.segment(lay.q, ng)) : Vector(Vector::Zero(ng));
  return pt;
}

double acopf_violation(const PowerNetwork& net, const OperatingPoint& pt) {
  const Index n = net.num_buses();
  const Injections inj = ac_injections(net, pt.v, pt.theta);
  Vector sp = Vector::Zero(n);
  Vector sq = Vector::Zero(n);
  double worst = 0.0;
  for (Index l = 0; l < n; ++l) {
    sp(l) = -net.buses[static_cast<std::size_t>(l)].p_demand;
    sq(l) = -net.buses[static_cast<std::size_t>(l)].q_demand;
    const Bus& b = net.buses[static_cast<std::size_t>(l)];
    worst = std::max({worst, pt.v(l) - b.v_max, b.v_min - pt.v(l)});
  }
  for (Index i = 0; i < net.num_generators(); ++i) {
    const Generator& g = net.generators[static_cast<std::size_t>(i)];
    sp(g.bus) += pt.p(i);
    sq(g.bus) += pt.q(i);
    worst = std::max({worst, pt.p(i) - g.p_max, g.p_min - pt.p(i), pt.q(i) - g.q_max, g.q_min - pt.q(i)});
  }
  worst = std::max(worst, (sp - inj.p).lpNorm<Eigen::Infinity>());
  worst = std::max(worst, (sq - inj.q).lpNorm<Eigen::Infinity>());
  for (const LineFlow& f : line_flows(net, pt.v, pt.theta)) {
    worst = std::max({worst, -f.slack_from, -f.slack_to});
  }
  worst = std::max({worst, std::abs(pt.v(0) - 1.0), std::abs(pt.theta(0))});
  return worst;
}

DistributedModel build_multistage_acopf(const PowerNetwork& net, const MultiStageSpec& ms) {
  validate(net);
  if (ms.stages < 1) throw Error(ErrorCode::kInvalidArgument, "multistage OPF needs at least one stage");
  const Index ng = net.num_generators();
  if (ng == 0) throw Error(ErrorCode::kInvalidArgument, "OPF needs at least one generator");
  if (!ms.demand_scale.empty() && static_cast<int>(ms.demand_scale.size()) != ms.stages) {
    throw Error(ErrorCode::kDimensionMismatch, "one demand scale per stage required");
  }
  if (static_cast<Index>(ms.ramp_down.size()) != ng || static_cast<Index>(ms.ramp_up.size()) != ng) {
    throw Error(ErrorCode::kDimensionMismatch, "one ramp bound pair per generator required");
  }
  for (Index i = 0; i < ng; ++i) {
    if (!(ms.ramp_down[static_cast<std::size_t>(i)] <= 0.0 && ms.ramp_up[static_cast<std::size_t>(i)] >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "ramp bounds must satisfy down <= 0 <= up");
    }
  }
  DistributedModel out;
  out.model = FlowModel::kAc;
  out.partition = partition_network(net, std::vector<Index>(static_cast<std::size_t>(net.num_buses()), 0));
  const Index m = 2 * ng * (ms.stages - 1);
  out.problem.b = Vector::Zero(m);
  std::vector<Vector> init;
  for (int k = 0; k < ms.stages; ++k) {
    const double scale = ms.demand_scale.empty() ? 1.0 : ms.demand_scale[static_cast<std::size_t>(k)];
    RegionSpec spec;
    spec.model = FlowModel::kAc;
    spec.nodes = net.num_buses();
    for (const Bus& b : net.buses) {
      spec.pd.push_back(scale * b.p_demand);
      spec.qd.push_back(scale * b.q_demand);
      spec.vmin.push_back(b.v_min);
      spec.vmax.push_back(b.v_max);
    }
    spec.reference_node = 0;
    spec.gens_at_node.resize(static_cast<std::size_t>(spec.nodes));
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      spec.gens_at_node[static_cast<std::size_t>(net.generators[g].bus)].push_back(static_cast<Index>(g));
      spec.gens.push_back(&net.generators[g]);
    }
    for (const Line& l : net.lines) spec.branches.push_back({l.from, l.to, l.g, l.b, l.s_max, l.p_max, true, true});
    spec.increments = k > 0;
    spec.ramp_down = ms.ramp_down;
    spec.ramp_up = ms.ramp_up;
    RegionLayout lay;
    Subsystem s = build_region(spec, lay, k, "stage" + std::to_string(k));
    for (Index l = 0; l < net.num_buses(); ++l) lay.buses.push_back(l);
    for (Index g = 0; g < ng; ++g) lay.generators.push_back(g);
    s.coupling = Matrix::Zero(m, lay.dim);
    // Transition k-1 -> k occupies rows 2 ng (k-1) .. 2 ng k - 1: p then q.
    if (k > 0) {
      const Index row = 2 * ng * (k - 1);
      for (Index g = 0; g < ng; ++g) {
        s.coupling(row + g, lay.p + g) = 1.0;
        s.coupling(row + g, lay.extra + g) = -1.0;
        s.coupling(row + ng + g, lay.q + g) = 1.0;
        s.coupling(row + ng + g, lay.extra + ng + g) = -1.0;
      }
    }
    if (k + 1 < ms.stages) {
      const Index row = 2 * ng * k;
      for (Index g = 0; g < ng; ++g) {
        s.coupling(row + g, lay.p + g) = -1.0;
        s.coupling(row + ng + g, lay.q + g) = -1.0;
      }
    }
    init.push_back(flat_start(lay));
    out.problem.subsystems.push_back(std::move(s));
    out.layouts.push_back(lay);
  }
  out.initial = out.problem.join(init);
  return out;
}

PowerNetwork four_bus_chain(bool lossless) {
  PowerNetwork net;
  net.name = lossless ? "chain4_lossless" : "chain4";
  net.buses = {{0.0, 0.0, 0.95, 1.05}, {0.6, 0.2, 0.95, 1.05}, {0.8, 0.3, 0.95, 1.05}, {0.0, 0.0, 0.95, 1.05}};
  const auto [g, b] = series_admittance(lossless ? 0.0 : 0.01, 0.1);
  for (Index l = 0; l < 3; ++l) net.lines.push_back({l, l + 1, g, b, 1.5, kInf});
  net.generators = {{0, 0.0, 2.0, -1.0, 1.0, 1.0, 1.0, 0.1}, {3, 0.0, 2.0, -1.0, 1.0, 2.0, 1.5, 0.1}};
  return net;
}

PowerNetwork pjm_five_bus() {
  PowerNetwork net;
  net.name = "pjm5";
  net.buses = {{0.0, 0.0, 0.9, 1.1}, {3.0, 0.9861, 0.9, 1.1}, {3.0, 0.9861, 0.9, 1.1}, {4.0, 1.3147, 0.9, 1.1},
               {0.0, 0.0, 0.9, 1.1}};
  struct Raw {
    Index a, b;
    double r, x, limit;
  };
  const Raw raw[] = {{0, 1, 0.00281, 0.0281, 4.0}, {0, 3, 0.00304, 0.0304, kInf}, {0, 4, 0.00064, 0.0064, kInf},
                     {1, 2, 0.00108, 0.0108, kInf}, {2, 3, 0.00297, 0.0297, kInf}, {3, 4, 0.00297, 0.0297, 2.4}};
  for (const Raw& r : raw) {
    const auto [g, b] = series_admittance(r.r, r.x);
    net.lines.push_back({r.a, r.b, g, b, r.limit, r.limit});
  }
  net.generators = {{0, 0.0, 0.4, -0.3, 0.3, 0.5, 14.0, 0.1},   {0, 0.0, 1.7, -1.275, 1.275, 0.5, 15.0, 0.1},
                    {2, 0.0, 5.2, -3.9, 3.9, 0.5, 30.0, 0.1},   {3, 0.0, 2.0, -1.5, 1.5, 0.5, 40.0, 0.1},
                    {4, 0.0, 6.0, -4.5, 4.5, 0.5, 10.0, 0.1}};
  return net;
}

PowerNetwork random_network(Index buses, std::uint64_t seed, bool lossless) {
  if (buses < 2) throw Error(ErrorCode::kInvalidArgument, "random network needs at least 2 buses");
  Rng rng(seed);
  PowerNetwork net;
  net.name = "random" + std::to_string(buses);
  for (Index l = 0; l < buses; ++l) {
    net.buses.push_back({rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.2), 0.9, 1.1});
  }
  auto add = [&](Index a, Index b) {
    const double x = rng.uniform(0.05, 0.3);
    const double r = lossless ? 0.0 : rng.uniform(0.005, 0.05);
    const auto [g, bs] = series_admittance(r, x);
    net.lines.push_back({a, b, g, bs, kInf, kInf});
  };
  for (Index l = 0; l + 1 < buses; ++l) add(l, l + 1);
  if (buses > 2) add(buses - 1, 0);
  for (Index l = 0; l + 2 < buses; l += 2) add(l, l + 2);
  net.generators.push_back({0, 0.0, 5.0, -5.0, 5.0, 1.0, 1.0, 0.1});
  return net;
}

}  // namespace distopt::opf
