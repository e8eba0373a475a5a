#include "distopt/aladin.hpp"
#include "distopt/oracle.hpp"
#include "distopt/scenarios.hpp"
#include "helpers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

using namespace distopt;
using distopt::test::consensus_toy;

namespace {

bool is_pd(const Matrix& h) { return Eigen::LLT<Matrix>(h).info() == Eigen::Success; }

Subsystem box_subsystem(double upper) {
  // k(y) = (y - 1)^2 with y <= upper.
  Subsystem s = test::scalar_block(0, 1.0, 1.0);
  s.inequalities = ConstraintFunction::linear(Matrix::Ones(1, 1), Vector::Constant(1, upper));
  return s;
}

PartiallySeparableProblem nonconvex_pair() {
  PartiallySeparableProblem p;
  Subsystem a;
  a.id = 0;
  a.dim = 1;
  a.objective.value = [](const Vector& z) { return std::pow(z(0) * z(0) - 1.0, 2); };
  a.objective.gradient = [](const Vector& z) { return Vector::Constant(1, 4.0 * z(0) * (z(0) * z(0) - 1.0)); };
  a.objective.hessian = [](const Vector& z) { return Matrix::Constant(1, 1, 12.0 * z(0) * z(0) - 4.0); };
  a.inequalities = ConstraintFunction::none();
  a.coupling = Matrix::Ones(1, 1);
  Subsystem b = test::scalar_block(1, 0.9, -1.0);
  p.subsystems = {a, b};
  p.b = Vector::Zero(1);
  return p;
}

}  // namespace

TEST(AladinIterate, KktPointIsFixedPoint) {
  const auto p = consensus_toy();
  AladinParams params;
  const auto s = aladin_initial_state(p, params, Vector::Zero(2), Vector::Constant(1, 2.0));
  const auto next = aladin_iterate(s, p, params);
  EXPECT_TRUE(next.terminal);
  EXPECT_LE(next.residual_l1, params.epsilon);
  EXPECT_LE(next.proximal_l1, params.epsilon);
}

TEST(AladinIterate, ConsensusToyConverges) {
  const auto r = aladin_solve(consensus_toy(), {}, AladinParams{});
  EXPECT_EQ(r.status, SolveStatus::kConverged);
  EXPECT_LE(r.iterations, 5);
  EXPECT_LE(r.x.norm(), 1e-8);
  EXPECT_NEAR(r.lambda(0), 2.0, 1e-6);
}

TEST(AladinIterate, NonconvexPairReachesKktPoint) {
  const auto p = nonconvex_pair();
  const auto r = aladin_solve(p, Vector::Constant(2, 0.5), AladinParams{});
  ASSERT_EQ(r.status, SolveStatus::kConverged);
  EXPECT_LE(r.residual_l1, 1e-8);
  const double z = r.x(0);
  EXPECT_NEAR(4.0 * z * (z * z - 1.0) + 2.0 * (z - 0.9), 0.0, 1e-6);
  // Brute-force scan of the reduced one-dimensional problem.
  double best = kInf;
  for (double t = -3.0; t <= 3.0; t += 1e-4) best = std::min(best, std::pow(t * t - 1, 2) + std::pow(t - 0.9, 2));
  EXPECT_NEAR(r.objective, best, 1e-6);
}

TEST(ActiveJacobian, Examples) {
  const Subsystem free = test::scalar_block(0, 0.0, 1.0);
  EXPECT_EQ(build_active_jacobian(free, Vector::Zero(1), Vector(), 1e-8).rows(), 0);

  const Subsystem capped = box_subsystem(0.0);
  const Matrix c = build_active_jacobian(capped, Vector::Zero(1), Vector::Constant(1, 2.0), 1e-8);
  ASSERT_EQ(c.rows(), 1);
  EXPECT_DOUBLE_EQ(c(0, 0), 1.0);
  EXPECT_EQ(build_active_jacobian(capped, Vector::Constant(1, -1.0), Vector::Zero(1), 1e-8).rows(), 0);

  Subsystem twice = free;
  twice.inequalities = ConstraintFunction::linear(Matrix::Ones(2, 1), Vector::Zero(2));
  std::vector<Index> rows;
  EXPECT_EQ(build_active_jacobian(twice, Vector::Zero(1), Vector::Zero(2), 1e-8, &rows).rows(), 2);
  EXPECT_EQ(rows, (std::vector<Index>{0, 1}));
}

TEST(ModifiedGradient, Examples) {
  const Subsystem s = box_subsystem(0.0);
  const Vector y = Vector::Constant(1, 0.25);
  const Vector grad = s.objective.gradient(y);
  const Matrix c = Matrix::Ones(1, 1);
  EXPECT_EQ(modified_gradient(s, y, Vector::Constant(1, 2.0), c, c), grad);
  const Vector g = modified_gradient(s, y, Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 1.5),
                                     Matrix::Constant(1, 1, 0.5));
  EXPECT_DOUBLE_EQ(g(0), grad(0) + 2.0);
  EXPECT_THROW(modified_gradient(s, y, Vector::Zero(2), c, c), Error);
}

TEST(Bfgs, ZeroDisplacementLeavesMemory) {
  BfgsMemory m = BfgsMemory::identity(2);
  bfgs_update(m, Vector::Ones(2), Vector::Zero(2));
  const BfgsMemory before = m;
  bfgs_update(m, Vector::Ones(2), Vector::Constant(2, 3.0));
  EXPECT_EQ(m.hessian, before.hessian);
  EXPECT_EQ(m.previous_gradient, before.previous_gradient);
}

TEST(Bfgs, RecoversQuadraticHessian) {
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 4;
    const Matrix q = test::random_spd(rng, n);
    const Vector c = test::random_vector(rng, n);
    // Q-conjugate independent steps.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
    BfgsMemory m = BfgsMemory::identity(n);
    Vector p = test::random_vector(rng, n);
    bfgs_update(m, p, q * p + c);
    for (Index k = 0; k < n; ++k) {
      p += rng.uniform(0.5, 2.0) * eig.eigenvectors().col(k);
      bfgs_update(m, p, q * p + c);
    }
    EXPECT_LE((m.hessian - q).norm(), 1e-6 * q.norm()) << "trial " << trial;
  }
}

TEST(Bfgs, NegativeCurvatureStaysPositiveDefinite) {
  BfgsMemory m = BfgsMemory::identity(2);
  bfgs_update(m, Vector::Zero(2), Vector::Zero(2));
  Vector s(2);
  s << 1.0, 0.5;
  bfgs_update(m, s, -s);
  EXPECT_TRUE(is_pd(m.hessian));
}

TEST(Bfgs, RandomPairsKeepPositiveDefinite) {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + trial % 5;
    BfgsMemory m = BfgsMemory::identity(n);
    for (int k = 0; k < 10; ++k) {
      bfgs_update(m, test::random_vector(rng, n, -5, 5), test::random_vector(rng, n, -5, 5));
      EXPECT_TRUE(is_pd(m.hessian));
      EXPECT_LE((m.hessian - m.hessian.transpose()).norm(), 1e-12 * m.hessian.norm());
    }
  }
}

TEST(StepUpdate, Examples) {
  const Vector x = Vector::Constant(2, 1.0), y = Vector::Constant(2, 3.0), dy = Vector::Constant(2, -0.5);
  const Vector l = Vector::Constant(1, 4.0), lqp = Vector::Constant(1, -1.0);
  auto full = step_update(x, l, y, dy, lqp, 1, 1, 1);
  EXPECT_EQ(full.x, Vector(y + dy));
  EXPECT_EQ(full.lambda, lqp);
  auto dual = step_update(x, l, y, dy, lqp, 0, 0, 1);
  EXPECT_EQ(dual.x, x);
  EXPECT_EQ(dual.lambda, lqp);
  auto none = step_update(x, l, y, dy, lqp, 0, 0, 0);
  EXPECT_EQ(none.x, x);
  EXPECT_EQ(none.lambda, l);
  EXPECT_THROW(step_update(x, l, Vector::Zero(3), dy, lqp, 1, 1, 1), Error);
}

TEST(AladinParams, Validation) {
  const auto p = consensus_toy();
  AladinParams params;
  params.mu = 0.0;
  EXPECT_THROW(aladin_solve(p, {}, params), Error);
  params = {};
  params.alpha2 = 1.5;
  EXPECT_THROW(aladin_solve(p, {}, params), Error);
  params = {};
  params.rho = -1.0;
  EXPECT_THROW(aladin_solve(p, {}, params), Error);
}

TEST(ExactHessian, RegularizedIsPositiveDefinite) {
  const auto p = nonconvex_pair();
  const Matrix h = regularized_exact_hessian(p.subsystems[0], Vector::Zero(1), Vector(), Matrix(0, 1), 1e-6);
  EXPECT_NEAR(h(0, 0), 1e-6, 1e-12);
  const Matrix k = regularized_exact_hessian(p.subsystems[0], Vector::Zero(1), Vector(), Matrix::Ones(1, 1), 1e-6);
  EXPECT_TRUE(is_pd(k));
}

TEST(AladinSolve, ConsensusToyTight) {
  AladinParams params;
  params.epsilon = 1e-8;
  const auto r = aladin_solve(consensus_toy(), {}, params);
  EXPECT_EQ(r.status, SolveStatus::kConverged);
  EXPECT_NEAR(r.objective, 2.0, 1e-8);
}

TEST(AladinSolve, DualStepOnlyStillConverges) {
  AladinParams params;
  params.alpha1 = 0.0;
  params.alpha2 = 0.0;
  params.max_iterations = 200;
  const auto r = aladin_solve(consensus_toy(), {}, params);
  EXPECT_EQ(r.status, SolveStatus::kConverged);
  EXPECT_NEAR(r.objective, 2.0, 1e-6);
}

TEST(AladinSolve, BatteryFleetMatchesOracle) {
  const auto sc = builtin_scenario("battery_fleet");
  const auto r = aladin_solve(sc.problem, sc.initial, sc.aladin);
  const auto oracle = centralized_solve(sc.problem, sc.initial, sc.oracle);
  ASSERT_EQ(oracle.status, SqpStatus::kConverged);
  EXPECT_EQ(r.status, SolveStatus::kConverged);
  EXPECT_LE(test::rel_diff(r.objective, oracle.objective), 1e-6);
}

TEST(AladinSolve, DcOpfMatchesOracle) {
  const auto sc = builtin_scenario("dc_opf");
  const auto r = aladin_solve(sc.problem, sc.initial, sc.aladin);
  const auto oracle = centralized_solve(sc.problem, sc.initial, sc.oracle);
  ASSERT_EQ(oracle.status, SqpStatus::kConverged);
  EXPECT_EQ(r.status, SolveStatus::kConverged);
  EXPECT_LE(test::rel_diff(r.objective, oracle.objective), 1e-6);
}

TEST(AladinSolve, TraceRecordsModeQuantities) {
  AladinParams params;
  params.hessian = HessianMode::kBfgs;
  const auto r = aladin_solve(consensus_toy(), {}, params);
  EXPECT_EQ(r.status, SolveStatus::kConverged);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_TRUE(r.trace.back().terminal);
  EXPECT_GT(r.trace.front().mu, 0.0);
  EXPECT_GT(r.trace.front().step_norm, 0.0);
}

TEST(AladinProperties, OracleKktPointIsFixedPoint) {
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = test::random_convex_problem(rng, 2 + trial % 2, 2, 1);
    const auto oracle = centralized_solve(p);
    ASSERT_EQ(oracle.status, SqpStatus::kConverged);
    AladinParams params;
    params.epsilon = 1e-6;
    const auto s = aladin_initial_state(p, params, oracle.x, oracle.lambda);
    const auto next = aladin_iterate(s, p, params);
    EXPECT_TRUE(next.terminal) << "trial " << trial << " residuals " << next.residual_l1 << " "
                               << next.proximal_l1;
  }
}

TEST(AladinProperties, ZeroPenaltyIsDualDecomposition) {
  Rng rng(54);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = test::random_convex_problem(rng, 2, 3, 2);
    LocalSolveSpec spec;
    spec.subsystem = &p.subsystems[trial % 2];
    spec.anchor = test::random_vector(rng, 3);
    spec.lambda = test::random_vector(rng, 2);
    spec.rho = 0.0;
    spec.scaling = Matrix::Zero(3, 3);
    const auto sol = solve_aladin_subproblem(spec);
    const auto terms = local_objective_terms(spec, sol.y);
    EXPECT_EQ(terms.proximal, 0.0);
    EXPECT_NEAR(terms.total(), terms.cost + terms.multiplier, 0.0);
  }
}

TEST(AladinProperties, ConvexInstancesMatchOracle) {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = test::random_convex_problem(rng, 2 + trial % 3, 2, 2);
    AladinParams params;
    params.hessian = trial % 2 ? HessianMode::kBfgs : HessianMode::kExact;
    params.max_iterations = 200;
    const auto r = aladin_solve(p, {}, params);
    const auto oracle = centralized_solve(p);
    ASSERT_EQ(oracle.status, SqpStatus::kConverged);
    EXPECT_EQ(r.status, SolveStatus::kConverged) << "trial " << trial;
    EXPECT_NEAR(r.objective, oracle.objective, 1e-6 * (1.0 + std::abs(oracle.objective))) << "trial " << trial;
  }
}

TEST(AladinProperties, QuadraticContractionOnStronglyConvexInstances) {
  // Smooth nonquadratic costs so the local contraction is visible.
  Rng rng(56);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    PartiallySeparableProblem p;
    Vector target = Vector::Zero(1);
    for (int i = 0; i < 2; ++i) {
      Subsystem s;
      s.id = i;
      s.dim = 2;
      const Vector c = test::random_vector(rng, 2);
      const double w = rng.uniform(0.1, 1.0);
      s.objective.value = [c, w](const Vector& x) { return (x - c).squaredNorm() + w * std::exp(x.sum()); };
      s.objective.gradient = [c, w](const Vector& x) {
        return Vector(2.0 * (x - c) + w * std::exp(x.sum()) * Vector::Ones(2));
      };
      s.objective.hessian = [w](const Vector& x) {
        return Matrix(2.0 * Matrix::Identity(2, 2) + w * std::exp(x.sum()) * Matrix::Ones(2, 2));
      };
      s.inequalities = ConstraintFunction::none();
      s.coupling = test::random_matrix(rng, 1, 2);
      target += s.coupling * test::random_vector(rng, 2);
      p.subsystems.push_back(s);
    }
    p.b = target;
    AladinParams params;
    params.epsilon = 1e-10;
    params.max_iterations = 50;
    const auto r = aladin_solve(p, {}, params);
    ASSERT_EQ(r.status, SolveStatus::kConverged) << "trial " << trial << " residual " << r.residual_l1
                                                 << " after " << r.iterations;
    std::vector<double> res;
    for (const auto& rec : r.trace) res.push_back(rec.residual_l1);
    // Steps whose outcome sits above the local solver tolerance; below it round-off dominates.
    for (std::size_t k = 1; k < res.size(); ++k) {
      if (res[k - 1] < 1e-2 && res[k] > 1e-8) {
        EXPECT_LE(res[k], 1e4 * res[k - 1] * res[k - 1]) << "trial " << trial;
        ++checked;
      }
    }
  }
  EXPECT_GE(checked, 100);
}
