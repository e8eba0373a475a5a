#pragma once

#include "distopt/problem.hpp"
#include "distopt/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

namespace distopt::test {

inline Subsystem scalar_block(Index id, double center, double sign) {
  Subsystem s;
  s.id = id;
  s.dim = 1;
  s.objective = SmoothFunction::quadratic(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -2.0 * center),
                                          center * center);
  s.inequalities = ConstraintFunction::none();
  s.coupling = Matrix::Constant(1, 1, sign);
  return s;
}

/// k_1 = (z - 1)^2, k_2 = (z + 1)^2, z_1 - z_2 = 0.
inline PartiallySeparableProblem consensus_toy() {
  PartiallySeparableProblem p;
  p.subsystems = {scalar_block(0, 1.0, 1.0), scalar_block(1, -1.0, -1.0)};
  p.b = Vector::Zero(1);
  return p;
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline Vector random_vector(Rng& rng, Index n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

inline Matrix random_spd(Rng& rng, Index n, double shift = 0.5) {
  const Matrix m = random_matrix(rng, n, n);
  return m * m.transpose() + shift * Matrix::Identity(n, n);
}

/// Strongly convex quadratic blocks with box constraints |x| <= box and a
/// random coupling whose target is met by an interior point.
inline PartiallySeparableProblem random_convex_problem(Rng& rng, int blocks, Index n, Index m, double box = 2.0) {
  PartiallySeparableProblem p;
  Vector target = Vector::Zero(m);
  for (int i = 0; i < blocks; ++i) {
    Subsystem s;
    s.id = i;
    s.dim = n;
    s.objective = SmoothFunction::quadratic(random_spd(rng, n), random_vector(rng, n));
    Matrix d(2 * n, n);
    d << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    s.inequalities = ConstraintFunction::linear(d, Vector::Constant(2 * n, box));
    s.coupling = random_matrix(rng, m, n);
    target += s.coupling * random_vector(rng, n, -0.5 * box, 0.5 * box);
    p.subsystems.push_back(std::move(s));
  }
  p.b = target;
  return p;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace distopt::test
