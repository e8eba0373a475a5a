#include "distopt/aladin.hpp"
#include "distopt/dense_qp.hpp"
#include "distopt/opf.hpp"
#include "distopt/oracle.hpp"
#include "distopt/sqp.hpp"
#include "helpers.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace distopt;
using namespace distopt::opf;

namespace {

// Lossless line with B_12 = B_21 = 10.
PowerNetwork two_bus(double demand = 0.0, double p_max = kInf) {
  PowerNetwork net;
  net.buses = {{0.0, 0.0, 0.9, 1.1}, {demand, 0.0, 0.9, 1.1}};
  net.lines = {{0, 1, 0.0, -10.0, kInf, p_max}};
  net.generators = {{0, 0.0, 5.0, -5.0, 5.0, 1.0, 2.0, 0.5}};
  return net;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Matrix numeric_jacobian(const PowerNetwork& net, const Vector& v, const Vector& theta) {
  const Index n = v.size();
  Matrix j(2 * n, 2 * n);
  auto stack = [&](const Vector& vv, const Vector& tt) {
    const Injections inj = ac_injections(net, vv, tt);
    Vector out(2 * n);
    out << inj.p, inj.q;
    return out;
  };
  for (Index c = 0; c < 2 * n; ++c) {
    const double h = 1e-7;
    Vector vp = v, vm = v, tp = theta, tm = theta;
    if (c < n) {
      vp(c) += h;
      vm(c) -= h;
    } else {
      tp(c - n) += h;
      tm(c - n) -= h;
    }
    j.col(c) = (stack(vp, tp) - stack(vm, tm)) / (2 * h);
  }
  return j;
}

double max_rel_error(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

SqpResult solve_central(const CentralModel& m) { return sqp_solve(m.nlp, m.initial); }

}  // namespace

TEST(AcInjections, FlatStartBalances) {
  const auto inj = ac_injections(four_bus_chain(true), Vector::Ones(4), Vector::Zero(4));
  EXPECT_LE(inj.p.norm() + inj.q.norm(), 1e-12);
}

TEST(AcInjections, TwoBusHandValues) {
  const PowerNetwork net = two_bus();
  const auto inj = ac_injections(net, Vector::Ones(2), vec({0.1, 0.0}));
  EXPECT_NEAR(inj.p(0), 10.0 * std::sin(0.1), 1e-12);
  EXPECT_NEAR(inj.p(0), 0.99833, 1e-5);
  EXPECT_NEAR(inj.p(1), -inj.p(0), 1e-12);
  EXPECT_NEAR(inj.q(0), 10.0 - 10.0 * std::cos(0.1), 1e-12);
  EXPECT_NEAR(inj.q(0), 0.049958, 1e-6);
  EXPECT_NEAR(inj.q(1), inj.q(0), 1e-12);
}

TEST(AcInjections, BilinearScaling) {
  const PowerNetwork net = two_bus();
  const Vector v = vec({1.02, 0.97}), theta = vec({0.1, -0.05});
  const auto a = ac_injections(net, v, theta);
  const auto b = ac_injections(net, Vector(2.0 * v), theta);
  EXPECT_LE((b.p - 4.0 * a.p).norm(), 1e-12);
  EXPECT_LE((b.q - 4.0 * a.q).norm(), 1e-12);
}

TEST(AcJacobian, AngleBlockAtFlatAngles) {
  // d/dtheta_k sin(theta_l - theta_k) = -cos(.), so the off-diagonal entry is -v_l v_k B_lk.
  const PowerNetwork net = four_bus_chain(true);
  const Vector v = vec({1.0, 1.05, 0.95, 1.02});
  const Matrix j = ac_jacobian(net, v, Vector::Zero(4));
  const Matrix b = net.susceptance();
  for (Index l = 0; l < 4; ++l)
    for (Index k = 0; k < 4; ++k)
      if (l != k) EXPECT_NEAR(j(l, 4 + k), -v(l) * v(k) * b(l, k), 1e-12);
}

TEST(AcJacobian, ZeroNetwork) {
  PowerNetwork net;
  net.buses.resize(3);
  const Matrix j = ac_jacobian(net, Vector::Ones(3), vec({0.1, 0.2, 0.3}));
  EXPECT_EQ(j, Matrix::Zero(6, 6));
}

TEST(AcJacobian, MatchesFiniteDifferencesOnThreeBus) {
  const PowerNetwork net = random_network(3, 7);
  const Vector v = vec({1.01, 0.98, 1.03}), theta = vec({0.0, -0.1, 0.05});
  EXPECT_LE(max_rel_error(ac_jacobian(net, v, theta), numeric_jacobian(net, v, theta)), 1e-6);
}

TEST(DcPowerFlow, Examples) {
  const PowerNetwork net = two_bus();
  EXPECT_EQ(dc_power_flow(net, Vector::Zero(2)), Vector::Zero(2));
  const Vector p = dc_power_flow(net, vec({0.1, 0.0}));
  EXPECT_NEAR(p(0), 1.0, 1e-12);
  EXPECT_NEAR(p(1), -1.0, 1e-12);
  Rng rng(81);
  const PowerNetwork big = random_network(6, 3);
  for (int trial = 0; trial < 100; ++trial) {
    EXPECT_NEAR(dc_power_flow(big, test::random_vector(rng, 6)).sum(), 0.0, 1e-12);
  }
}

TEST(DcPowerFlow, InconsistentRowsWarn) {
  Matrix b(2, 2);
  b << -10, 10, 10, -7;
  std::vector<std::string> warnings;
  dc_power_flow(b, vec({0.1, 0.0}), &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("2"), std::string::npos);
}

TEST(LineFlows, FlatProfileDisplayConvention) {
  const PowerNetwork net = four_bus_chain();
  const auto flows = line_flows(net, Vector::Ones(4), Vector::Zero(4), FlowConvention::kDisplay);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    EXPECT_NEAR(flows[i].p_from, 0.0, 1e-12);
    EXPECT_NEAR(flows[i].q_from, -2.0 * net.lines[i].b, 1e-12);
  }
  // The physical flow carries nothing on a flat profile.
  for (const auto& f : line_flows(net, Vector::Ones(4), Vector::Zero(4))) EXPECT_NEAR(f.q_from, 0.0, 1e-12);
}

TEST(LineFlows, OpenBranchCarriesNothing) {
  for (auto convention : {FlowConvention::kPhysical, FlowConvention::kDisplay}) {
    const auto [p, q] = branch_flow(0.0, 0.0, 1.03, 0.98, 0.2, convention);
    EXPECT_EQ(p, 0.0);
    EXPECT_EQ(q, 0.0);
  }
}

TEST(LineFlows, LossesAreNonnegative) {
  Rng rng(82);
  for (int trial = 0; trial < 100; ++trial) {
    const double g = rng.uniform(0.0, 5.0), b = rng.uniform(-20.0, -1.0), t = rng.uniform(-0.5, 0.5);
    const auto lk = branch_flow(g, b, 1.0, 1.0, t);
    const auto kl = branch_flow(g, b, 1.0, 1.0, -t);
    EXPECT_NEAR(lk.first + kl.first, 2.0 * g * (1.0 - std::cos(t)), 1e-12);
    EXPECT_GE(lk.first + kl.first, -1e-15);
  }
}

TEST(LineFlows, LimitSlack) {
  PowerNetwork net = two_bus();
  net.lines[0].s_max = 2.0;
  const auto f = line_flows(net, Vector::Ones(2), vec({0.1, 0.0}))[0];
  EXPECT_NEAR(f.slack_from, 2.0 - std::hypot(f.p_from, f.q_from), 1e-12);
  EXPECT_NEAR(f.slack_to, 2.0 - std::hypot(f.p_to, f.q_to), 1e-12);
}

TEST(CentralAcOpf, SingleBus) {
  PowerNetwork net;
  net.buses = {{0.7, 0.1, 0.9, 1.1}};
  net.generators = {{0, 0.0, 2.0, -1.0, 1.0, 3.0, 2.0, 0.5}};
  const auto m = build_centralized_acopf(net);
  const auto r = solve_central(m);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  const auto op = extract_central(m, r.x);
  EXPECT_NEAR(op.p(0), 0.7, 1e-8);
  EXPECT_NEAR(m.nlp.objective.value(r.x), 3.0 * 0.49 + 2.0 * 0.7 + 0.5, 1e-8);
}

TEST(CentralAcOpf, TwoBusLossless) {
  const PowerNetwork net = two_bus(0.8);
  const auto m = build_centralized_acopf(net);
  const auto r = solve_central(m);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  const auto op = extract_central(m, r.x);
  EXPECT_NEAR(op.p(0), 0.8, 1e-8);
  const auto flows = line_flows(net, op.v, op.theta);
  EXPECT_NEAR(flows[0].p_from, 0.8, 1e-8);
}

TEST(CentralAcOpf, ExcessDemandIsInfeasible) {
  PowerNetwork net = two_bus(6.0);
  const auto r = solve_central(build_centralized_acopf(net));
  EXPECT_NE(r.status, SqpStatus::kConverged);
}

TEST(DcOpf, ZeroDemand) {
  PowerNetwork net = pjm_five_bus();
  for (auto& b : net.buses) b.p_demand = 0.0;
  const auto dc = build_dcopf(net);
  const auto r = solve_central(dc.model);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  EXPECT_LE(r.x.lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_NEAR(dc.model.nlp.objective.value(r.x), 0.5, 1e-10);
}

TEST(DcOpf, FiveBusMatchesReducedQp) {
  // Independent reference: eliminate theta through the reduced susceptance
  // matrix and solve the strictly convex QP in the generator outputs alone.
  const PowerNetwork net = pjm_five_bus();
  const auto dc = build_dcopf(net);
  const auto r = solve_central(dc.model);
  ASSERT_EQ(r.status, SqpStatus::kConverged);

  const Index n = net.num_buses(), ng = net.num_generators();
  const Matrix b = net.susceptance();
  Matrix gen_map = Matrix::Zero(n, ng);
  Vector d(n);
  for (Index i = 0; i < ng; ++i) gen_map(net.generators[static_cast<std::size_t>(i)].bus, i) = 1.0;
  for (Index l = 0; l < n; ++l) d(l) = net.buses[static_cast<std::size_t>(l)].p_demand;
  // B theta = d - G u with theta_1 = 0: theta_r = B_rr^{-1} (d - G u)_r.
  const Matrix brr_inv = b.bottomRightCorner(n - 1, n - 1).inverse();
  Matrix theta_of_u = Matrix::Zero(n, ng);
  Vector theta_const = Vector::Zero(n);
  theta_of_u.bottomRows(n - 1) = -brr_inv * gen_map.bottomRows(n - 1);
  theta_const.tail(n - 1) = brr_inv * d.tail(n - 1);
  DenseQp qp;
  qp.hessian = Matrix::Zero(ng, ng);
  qp.linear = Vector::Zero(ng);
  for (Index i = 0; i < ng; ++i) {
    qp.hessian(i, i) = 2.0 * net.generators[static_cast<std::size_t>(i)].alpha;
    qp.linear(i) = net.generators[static_cast<std::size_t>(i)].beta;
  }
  qp.eq_matrix = Matrix::Ones(1, ng);
  qp.eq_rhs = Vector::Constant(1, d.sum());
  std::vector<Vector> rows;
  std::vector<double> rhs;
  for (Index i = 0; i < ng; ++i) {
    Vector e = Vector::Zero(ng);
    e(i) = 1.0;
    rows.push_back(e);
    rhs.push_back(net.generators[static_cast<std::size_t>(i)].p_max);
    rows.push_back(-e);
    rhs.push_back(-net.generators[static_cast<std::size_t>(i)].p_min);
  }
  for (const Line& l : net.lines) {
    if (!std::isfinite(l.p_max)) continue;
    // flow = -b (theta_from - theta_to)
    const Vector coef = -l.b * (theta_of_u.row(l.from) - theta_of_u.row(l.to)).transpose();
    const double offset = -l.b * (theta_const(l.from) - theta_const(l.to));
    rows.push_back(coef);
    rhs.push_back(l.p_max - offset);
    rows.push_back(-coef);
    rhs.push_back(l.p_max + offset);
  }
  qp.ineq_matrix.resize(static_cast<Index>(rows.size()), ng);
  qp.ineq_rhs.resize(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    qp.ineq_matrix.row(static_cast<Index>(k)) = rows[k].transpose();
    qp.ineq_rhs(static_cast<Index>(k)) = rhs[k];
  }
  const auto ref = solve_dense_qp(qp);
  ASSERT_EQ(ref.status, QpStatus::kOptimal);
  const double ref_cost = 0.5 * ref.x.dot(qp.hessian * ref.x) + qp.linear.dot(ref.x) + dc.constant;
  EXPECT_NEAR(dc.model.nlp.objective.value(r.x), ref_cost, 1e-8 * std::abs(ref_cost));
  EXPECT_LE((r.x.tail(ng) - ref.x).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(DcOpf, BindingLineLimitInfeasible) {
  const auto r = solve_central(build_dcopf(two_bus(1.0, 0.5)).model);
  EXPECT_NE(r.status, SqpStatus::kConverged);
}

TEST(Partition, ChainSplit) {
  const auto part = partition_network(four_bus_chain(), {0, 0, 1, 1});
  EXPECT_EQ(part.regions, 2);
  EXPECT_EQ(part.cut_lines.size(), 1u);
  EXPECT_EQ(part.aux.size(), 2u);
  const auto model = build_distributed_acopf(four_bus_chain(), part);
  EXPECT_EQ(model.problem.coupling_rows(), 4);
}

TEST(Partition, SingleRegion) {
  const auto part = partition_network(four_bus_chain(), {0, 0, 0, 0});
  EXPECT_TRUE(part.aux.empty());
  EXPECT_EQ(build_distributed_acopf(four_bus_chain(), part).problem.coupling_rows(), 0);
}

TEST(Partition, TriangleSplit) {
  PowerNetwork tri = random_network(3, 2);
  tri.lines = {{0, 1, 1.0, -10.0, kInf, kInf}, {1, 2, 1.0, -10.0, kInf, kInf}, {0, 2, 1.0, -10.0, kInf, kInf}};
  const auto part = partition_network(tri, {0, 1, 1});
  EXPECT_EQ(part.cut_lines.size(), 2u);
  EXPECT_EQ(part.aux.size(), 4u);
  EXPECT_EQ(build_distributed_acopf(tri, part).problem.coupling_rows(), 8);
}

TEST(Partition, EmptyRegionRejected) {
  EXPECT_THROW(partition_network(four_bus_chain(), {0, 0, 2, 2}), Error);
  EXPECT_THROW(partition_network(four_bus_chain(), {0, 0, 1}), Error);
}

TEST(DistributedAcOpf, SingleRegionEqualsCentral) {
  const PowerNetwork net = four_bus_chain();
  const auto model = build_distributed_acopf(net, partition_network(net, {0, 0, 0, 0}));
  const auto dist = centralized_solve(model.problem, model.initial);
  const auto central = build_centralized_acopf(net);
  const auto r = solve_central(central);
  ASSERT_EQ(dist.status, SqpStatus::kConverged);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  EXPECT_NEAR(dist.objective, central.nlp.objective.value(r.x), 1e-8);
}

TEST(DistributedAcOpf, LosslessChainMatchesCentralAndHoldsConsensus) {
  const PowerNetwork net = four_bus_chain(true);
  const auto model = build_distributed_acopf(net, partition_network(net, {0, 0, 1, 1}));
  AladinParams params;
  params.rho = 10.0;
  params.mu = 1e5;
  const auto r = aladin_solve(model.problem, model.initial, params);
  ASSERT_EQ(r.status, SolveStatus::kConverged);
  const auto central = build_centralized_acopf(net);
  const auto ref = solve_central(central);
  ASSERT_EQ(ref.status, SqpStatus::kConverged);
  EXPECT_LE(test::rel_diff(r.objective, central.nlp.objective.value(ref.x)), 1e-6);
  const Vector res = coupling_residual(model.problem, r.x);
  ASSERT_EQ(res.size(), 4);
  for (Index k = 0; k < 4; ++k) EXPECT_LE(std::abs(res(k)), 1e-6);
  EXPECT_LE(acopf_violation(net, merge_solution(model, r.x)), 1e-6);
}

TEST(DistributedDcOpf, MatchesCentral) {
  const PowerNetwork net = pjm_five_bus();
  const auto model = build_distributed_dcopf(net, partition_network(net, {0, 0, 0, 1, 1}));
  const auto dist = centralized_solve(model.problem, model.initial);
  const auto dc = build_dcopf(net);
  const auto ref = solve_central(dc.model);
  ASSERT_EQ(dist.status, SqpStatus::kConverged);
  ASSERT_EQ(ref.status, SqpStatus::kConverged);
  EXPECT_LE(test::rel_diff(dist.objective, dc.model.nlp.objective.value(ref.x)), 1e-6);
}

TEST(MultiStage, SingleStageIsStatic) {
  const PowerNetwork net = four_bus_chain();
  MultiStageSpec spec;
  spec.stages = 1;
  spec.ramp_down = {-1.0, -1.0};
  spec.ramp_up = {1.0, 1.0};
  const auto model = build_multistage_acopf(net, spec);
  EXPECT_EQ(model.problem.coupling_rows(), 0);
  const auto ms = centralized_solve(model.problem, model.initial);
  const auto central = build_centralized_acopf(net);
  const auto ref = solve_central(central);
  ASSERT_EQ(ms.status, SqpStatus::kConverged);
  EXPECT_NEAR(ms.objective, central.nlp.objective.value(ref.x), 1e-8);
}

TEST(MultiStage, ConstantDemandRepeatsStaticOptimum) {
  const PowerNetwork net = four_bus_chain();
  MultiStageSpec spec;
  spec.stages = 3;
  spec.ramp_down = {-5.0, -5.0};
  spec.ramp_up = {5.0, 5.0};
  const auto model = build_multistage_acopf(net, spec);
  const auto ms = centralized_solve(model.problem, model.initial);
  ASSERT_EQ(ms.status, SqpStatus::kConverged);
  const auto central = build_centralized_acopf(net);
  const auto ref = solve_central(central);
  const double stage = central.nlp.objective.value(ref.x);
  // Identical stages: du = 0 and each stage sits at the static optimum.
  EXPECT_NEAR(ms.objective, 3.0 * stage, 1e-7);
  EXPECT_LE(coupling_residual(model.problem, ms.x).norm(), 1e-8);
}

TEST(MultiStage, RampBudgetTooSmall) {
  const PowerNetwork net = four_bus_chain();
  MultiStageSpec spec;
  spec.stages = 2;
  spec.demand_scale = {0.5, 1.5};
  spec.ramp_down = {-0.05, -0.05};
  spec.ramp_up = {0.05, 0.05};
  const auto model = build_multistage_acopf(net, spec);
  const auto ms = centralized_solve(model.problem, model.initial);
  EXPECT_NE(ms.status, SqpStatus::kConverged);
}

TEST(CaseFile, TwoBusFixture) {
  const std::string text = R"({"name": "two", "buses": [{"pd": 0, "qd": 0, "vmin": 0.9, "vmax": 1.1},
    {"pd": 0.5, "qd": 0.1, "vmin": 0.9, "vmax": 1.1}],
    "lines": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1}],
    "generators": [{"bus": 1, "pmin": 0, "pmax": 2, "qmin": -1, "qmax": 1, "alpha": 1, "beta": 1, "gamma": 0}]})";
  const PowerNetwork net = parse_case_json(text);
  const std::complex<double> y(0.01 / 0.0101, -0.1 / 0.0101);
  ComplexMatrix expected(2, 2);
  expected << y, -y, -y, y;
  EXPECT_LE((net.admittance() - expected).norm(), 1e-12);
}

TEST(CaseFile, MissingGeneratorBound) {
  const std::string text = R"({"buses": [{"pd": 0, "qd": 0, "vmin": 0.9, "vmax": 1.1}], "lines": [],
    "generators": [{"bus": 1, "pmin": 0, "qmin": -1, "qmax": 1, "alpha": 1, "beta": 1, "gamma": 0}]})";
  try {
    parse_case_json(text);
    FAIL() << "expected a schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("pmax"), std::string::npos);
  }
}

TEST(CaseFile, RoundTrip) {
  const PowerNetwork net = pjm_five_bus();
  const auto path = std::filesystem::temp_directory_path() / "distopt_pjm5_roundtrip.json";
  write_case_file(net, path.string());
  const PowerNetwork back = parse_case_file(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(write_case_json(back), write_case_json(net));
  EXPECT_LE((back.admittance() - net.admittance()).norm(), 0.0);
}

TEST(OpfProperties, LosslessConservation) {
  Rng rng(83);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + trial % 4;
    const PowerNetwork net = random_network(n, 1000 + trial, true);
    const Vector v = test::random_vector(rng, n, 0.9, 1.1);
    const Vector theta = test::random_vector(rng, n, -0.3, 0.3);
    EXPECT_LE(std::abs(ac_injections(net, v, theta).p.sum()), 1e-10);
  }
}

TEST(OpfProperties, JacobianMatchesFiniteDifferences) {
  Rng rng(84);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = trial % 2 ? 5 : 3;
    const PowerNetwork net = random_network(n, 2000 + trial);
    const Vector v = test::random_vector(rng, n, 0.9, 1.1);
    const Vector theta = test::random_vector(rng, n, -0.3, 0.3);
    EXPECT_LE(max_rel_error(ac_jacobian(net, v, theta), numeric_jacobian(net, v, theta)), 1e-6);
  }
}

TEST(OpfProperties, DcIsCubicallyAccurateLinearization) {
  Rng rng(85);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + trial % 4;
    const PowerNetwork net = random_network(n, 3000 + trial, true);
    Vector theta = test::random_vector(rng, n, -0.2, 0.2);
    auto err = [&](const Vector& t) {
      return (ac_injections(net, Vector::Ones(n), t).p - dc_power_flow(net, t)).norm();
    };
    const double e1 = err(theta);
    const double e2 = err(Vector(0.5 * theta));
    const double e3 = err(Vector(0.25 * theta));
    EXPECT_GE(e1 / e2, 6.0);
    EXPECT_LE(e1 / e2, 10.0);
    EXPECT_GE(e2 / e3, 6.0);
    EXPECT_LE(e2 / e3, 10.0);
  }
}

TEST(OpfProperties, PartitionRoundTripFeasible) {
  const PowerNetwork chain = four_bus_chain();
  for (const auto& assignment : std::vector<std::vector<Index>>{{0, 0, 1, 1}, {0, 1, 1, 1}, {0, 1, 2, 3}}) {
    const auto model = build_distributed_acopf(chain, partition_network(chain, assignment));
    const auto r = centralized_solve(model.problem, model.initial);
    ASSERT_EQ(r.status, SqpStatus::kConverged);
    EXPECT_LE(acopf_violation(chain, merge_solution(model, r.x)), 1e-6);
  }
  Rng rng(86);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + trial % 3;
    const PowerNetwork net = random_network(n, 4000 + trial);
    std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
    const Index cut = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(n - 1));
    for (Index l = cut; l < n; ++l) assignment[static_cast<std::size_t>(l)] = 1;
    const auto model = build_distributed_acopf(net, partition_network(net, assignment));
    const auto r = centralized_solve(model.problem, model.initial);
    ASSERT_EQ(r.status, SqpStatus::kConverged) << "trial " << trial;
    EXPECT_LE(acopf_violation(net, merge_solution(model, r.x)), 1e-6) << "trial " << trial;
  }
}
