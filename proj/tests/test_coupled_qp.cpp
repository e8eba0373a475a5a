#include "distopt/coupled_qp.hpp"
#include "distopt/error.hpp"
#include "distopt/sqp.hpp"
#include "helpers.hpp"

using namespace distopt;

namespace {

AladinQpBlock scalar_block(double h, double g, double c_row, double a, double y) {
  AladinQpBlock blk;
  blk.hessian = Matrix::Constant(1, 1, h);
  blk.gradient = Vector::Constant(1, g);
  blk.active_jacobian = std::isnan(c_row) ? Matrix(0, 1) : Matrix::Constant(1, 1, c_row);
  blk.coupling = Matrix::Constant(1, 1, a);
  blk.point = Vector::Constant(1, y);
  return blk;
}

AladinQpData random_qp(Rng& rng, int blocks, Index n, Index m) {
  AladinQpData d;
  for (int i = 0; i < blocks; ++i) {
    AladinQpBlock blk;
    blk.hessian = test::random_spd(rng, n);
    blk.gradient = test::random_vector(rng, n);
    blk.active_jacobian = test::random_matrix(rng, static_cast<Index>(rng.uniform() * n), n);
    blk.coupling = test::random_matrix(rng, m, n);
    blk.point = test::random_vector(rng, n);
    d.blocks.push_back(blk);
  }
  d.lambda = test::random_vector(rng, m);
  d.b = test::random_vector(rng, m);
  d.mu = rng.uniform(1.0, 100.0);
  return d;
}

void expect_invariants(const AladinQpData& d, const CoupledQpSolution& s) {
  Vector lhs = -d.b - s.slack;
  for (std::size_t i = 0; i < d.blocks.size(); ++i) {
    const auto& blk = d.blocks[i];
    if (blk.active_jacobian.rows() > 0) {
      EXPECT_LE((blk.active_jacobian * s.dy[i]).lpNorm<Eigen::Infinity>(), 1e-8);
    }
    lhs += blk.coupling * (blk.point + s.dy[i]);
  }
  EXPECT_LE(lhs.lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((d.lambda + d.mu * s.slack - s.lambda_qp).lpNorm<Eigen::Infinity>(), 1e-8 * (1.0 + d.mu));
}

}  // namespace

TEST(AladinQp, FixedPointWhenConsistent) {
  AladinQpData d;
  d.blocks = {scalar_block(1.0, 0.0, NAN, 1.0, 0.7), scalar_block(2.0, 0.0, NAN, -1.0, 0.7)};
  d.lambda = Vector::Zero(1);
  d.b = Vector::Zero(1);
  d.mu = 10.0;
  auto s = solve_aladin_qp(d);
  EXPECT_LE(s.dy[0].norm() + s.dy[1].norm(), 1e-12);
  EXPECT_LE(s.slack.norm(), 1e-12);
  EXPECT_NEAR(s.lambda_qp(0), 0.0, 1e-12);

  // For nonzero lambda the fixed point needs the matching gradient g_i = -A_i' lambda.
  d.lambda = Vector::Constant(1, 0.3);
  d.blocks[0].gradient = Vector::Constant(1, -0.3);
  d.blocks[1].gradient = Vector::Constant(1, 0.3);
  s = solve_aladin_qp(d);
  EXPECT_LE(s.dy[0].norm() + s.dy[1].norm(), 1e-12);
  EXPECT_LE(s.slack.norm(), 1e-12);
  EXPECT_NEAR(s.lambda_qp(0), 0.3, 1e-12);
}

TEST(AladinQp, HandSolvedScalar) {
  AladinQpData d;
  d.blocks = {scalar_block(1.0, 1.0, NAN, 1.0, 1.0)};
  d.lambda = Vector::Zero(1);
  d.b = Vector::Zero(1);
  d.mu = 10.0;
  const auto s = solve_aladin_qp(d);
  EXPECT_NEAR(s.dy[0](0), -1.0, 1e-12);
  EXPECT_NEAR(s.slack(0), 0.0, 1e-12);
  EXPECT_NEAR(s.lambda_qp(0), 0.0, 1e-12);
}

TEST(AladinQp, PinnedVariable) {
  AladinQpData d;
  d.blocks = {scalar_block(1.0, 5.0, 1.0, 1.0, 2.0)};
  d.lambda = Vector::Zero(1);
  d.b = Vector::Constant(1, 0.5);
  d.mu = 10.0;
  const auto s = solve_aladin_qp(d);
  EXPECT_NEAR(s.dy[0](0), 0.0, 1e-12);
  EXPECT_NEAR(s.slack(0), 1.5, 1e-12);
}

TEST(AladinQp, RedundantActiveRowsAreDropped) {
  AladinQpData d;
  AladinQpBlock blk;
  blk.hessian = Matrix::Identity(2, 2);
  blk.gradient = Vector::Ones(2);
  blk.active_jacobian = Matrix(2, 2);
  blk.active_jacobian << 1.0, 1.0, 2.0, 2.0;
  blk.coupling = Matrix::Identity(2, 2);
  blk.point = Vector::Zero(2);
  d.blocks = {blk};
  d.lambda = Vector::Zero(2);
  d.b = Vector::Zero(2);
  const auto s = solve_aladin_qp(d);
  EXPECT_EQ(s.kept_rows[0].size(), 1u);
  expect_invariants(d, s);
}

TEST(AladinQp, RejectsNonPositiveMu) {
  AladinQpData d;
  d.blocks = {scalar_block(1.0, 1.0, NAN, 1.0, 1.0)};
  d.lambda = Vector::Zero(1);
  d.b = Vector::Zero(1);
  d.mu = 0.0;
  EXPECT_THROW(solve_aladin_qp(d), Error);
}

TEST(AdmmQp, ConsensusFeasibleIsFixedPoint) {
  const std::vector<Matrix> a = {Matrix::Ones(1, 1), -Matrix::Ones(1, 1)};
  const std::vector<Vector> y = {Vector::Constant(1, 0.4), Vector::Constant(1, 0.4)};
  const std::vector<Vector> l = {Vector::Zero(1), Vector::Zero(1)};
  const auto x = solve_admm_qp(a, y, l, 1.0, Vector::Zero(1));
  EXPECT_NEAR(x[0](0), 0.4, 1e-9);
  EXPECT_NEAR(x[1](0), 0.4, 1e-9);
}

TEST(AdmmQp, HandSolvedSum) {
  const std::vector<Matrix> a = {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  const std::vector<Vector> y = {Vector::Zero(1), Vector::Zero(1)};
  const std::vector<Vector> l = {Vector::Zero(1), Vector::Zero(1)};
  const auto x = solve_admm_qp(a, y, l, 1.0, Vector::Constant(1, 2.0));
  EXPECT_NEAR(x[0](0), 1.0, 1e-9);
  EXPECT_NEAR(x[1](0), 1.0, 1e-9);
}

TEST(AdmmQp, SymmetricFeasiblePoint) {
  const std::vector<Matrix> a = {Matrix::Ones(1, 1), -Matrix::Ones(1, 1)};
  const std::vector<Vector> y = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  const std::vector<Vector> l = {Vector::Zero(1), Vector::Zero(1)};
  const auto x = solve_admm_qp(a, y, l, 1.0, Vector::Zero(1));
  // y violates x1 - x2 = 0 by 2; the A-weighted projection splits it evenly.
  EXPECT_NEAR(x[0](0), 0.0, 1e-9);
  EXPECT_NEAR(x[1](0), 0.0, 1e-9);
}

TEST(AdmmQp, NullSpaceAnchoredAtY) {
  Matrix a1(1, 2);
  a1 << 1.0, 0.0;
  const std::vector<Matrix> a = {a1, Matrix::Ones(1, 1)};
  Vector y0(2);
  y0 << 0.0, 7.0;
  const std::vector<Vector> y = {y0, Vector::Zero(1)};
  const std::vector<Vector> l = {Vector::Zero(1), Vector::Zero(1)};
  const auto x = solve_admm_qp(a, y, l, 1.0, Vector::Constant(1, 1.0));
  EXPECT_NEAR(x[0](1), 7.0, 1e-8);
  EXPECT_NEAR(x[0](0) + x[1](0), 1.0, 1e-9);
}

TEST(SolveKkt, Unconstrained) {
  const Vector g = Vector::LinSpaced(3, 1.0, 3.0);
  const Vector z = solve_kkt(Matrix::Identity(3, 3), Matrix(0, 3), Vector(-g));
  EXPECT_LE((z + g).norm(), 1e-15);
}

TEST(SolveKkt, SaddleHandInverse) {
  // [2 1; 1 0]^{-1} = [0 1; 1 -2]
  const Vector z = solve_kkt(Matrix::Constant(1, 1, 2.0), Matrix::Ones(1, 1), Vector::Constant(2, 1.0));
  EXPECT_NEAR(z(0), 1.0, 1e-15);
  EXPECT_NEAR(z(1), -1.0, 1e-15);
}

TEST(SolveKkt, ZeroPivotIsSingular) {
  Matrix h = Matrix::Identity(2, 2);
  h(1, 1) = 0.0;
  try {
    solve_kkt(h, Matrix(0, 2), Vector::Ones(2));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingular);
    EXPECT_NE(std::string(e.what()).find("rank defect 1"), std::string::npos);
  }
}

TEST(CoupledQpProperties, InvariantsOnRandomInstances) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_qp(rng, 2 + trial % 3, 3, 2);
    expect_invariants(d, solve_aladin_qp(d));
  }
}

TEST(CoupledQpProperties, KktResidualSmall) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 4, m = 2;
    const Matrix h = test::random_spd(rng, n);
    const Matrix e = test::random_matrix(rng, m, n);
    const Vector rhs = test::random_vector(rng, n + m, -10, 10);
    const Vector z = solve_kkt(h, e, rhs);
    Matrix k = Matrix::Zero(n + m, n + m);
    k << h, e.transpose(), e, Matrix::Zero(m, m);
    EXPECT_LE((k * z - rhs).norm(), 1e-8 * (1.0 + rhs.norm()));
  }
}

TEST(CoupledQpProperties, MatchesGenericSolver) {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_qp(rng, 2, 3, 2);
    const auto s = solve_aladin_qp(d);
    // Same QP over (dy_1, dy_2, s) handed to the SQP engine.
    const Index n = 3, m = 2, dim = 2 * n + m;
    Matrix q = Matrix::Zero(dim, dim);
    Vector c = Vector::Zero(dim);
    Matrix eq = Matrix::Zero(m, dim);
    Vector rhs = d.b;
    std::vector<Matrix> crows;
    Index crow_count = 0;
    for (int i = 0; i < 2; ++i) {
      q.block(i * n, i * n, n, n) = d.blocks[i].hessian;
      c.segment(i * n, n) = d.blocks[i].gradient;
      eq.block(0, i * n, m, n) = d.blocks[i].coupling;
      rhs -= d.blocks[i].coupling * d.blocks[i].point;
      crow_count += d.blocks[i].active_jacobian.rows();
    }
    q.bottomRightCorner(m, m) = d.mu * Matrix::Identity(m, m);
    c.tail(m) = d.lambda;
    eq.rightCols(m) = -Matrix::Identity(m, m);
    Matrix all(m + crow_count, dim);
    all.setZero();
    all.topRows(m) = eq;
    Index r = m;
    for (int i = 0; i < 2; ++i) {
      const Matrix& cj = d.blocks[i].active_jacobian;
      all.block(r, i * n, cj.rows(), n) = cj;
      r += cj.rows();
    }
    Vector target = Vector::Zero(m + crow_count);
    target.head(m) = rhs;
    NlpProblem nlp;
    nlp.dim = dim;
    nlp.objective = SmoothFunction::quadratic(q, c);
    nlp.inequalities = ConstraintFunction::none();
    nlp.equalities = ConstraintFunction::linear(all, target);
    const auto ref = sqp_solve(nlp, Vector::Zero(dim));
    ASSERT_EQ(ref.status, SqpStatus::kConverged);
    EXPECT_LE((ref.x.head(n) - s.dy[0]).norm(), 1e-8);
    EXPECT_LE((ref.x.segment(n, n) - s.dy[1]).norm(), 1e-8);
    EXPECT_LE((ref.x.tail(m) - s.slack).norm(), 1e-8);
  }
}

TEST(CoupledQpProperties, SlackShrinksWithMu) {
  Rng rng(34);
  auto d = random_qp(rng, 2, 3, 2);
  double last = kInf;
  for (double mu : {1e2, 1e4, 1e6}) {
    d.mu = mu;
    const double norm = solve_aladin_qp(d).slack.norm();
    EXPECT_LT(norm, last);
    last = norm;
  }
}
