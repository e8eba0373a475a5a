#pragma once

#include "distopt/comms.hpp"
#include "distopt/coupled_qp.hpp"
#include "distopt/local_nlp.hpp"
#include "distopt/problem.hpp"
#include "distopt/trace.hpp"

#include <optional>

namespace distopt {

enum class HessianMode { kExact, kBfgs };
enum class ScalingRule { kIdentity, kCouplingGram, kUser };

const char* to_string(HessianMode mode);

struct AladinParams {
  double rho = 1.0;
  double mu = 1e3;
  double mu_max = 1e8;
  bool grow_mu = true;
  double epsilon = 1e-8;
  int max_iterations = 100;
  ScalingRule scaling = ScalingRule::kIdentity;
  std::vector<Matrix> user_scaling;
  HessianMode hessian = HessianMode::kExact;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
  /// Retry an iteration with (0, 0, 1) when the coupling residual grows 10x.
  bool fallback = true;
  /// Activity band for the active set; <= 0 selects 1e-8 * (1 + ||h||_inf).
  double activity_tol = 0.0;
  double local_tolerance = 1e-10;
  /// Floor on the eigenvalues of the exact Hessian blocks.
  double hessian_floor = 1e-6;
  bool parallel = false;
};

void validate(const AladinParams& params, const PartiallySeparableProblem& problem);

/// Sigma_i for every subsystem according to the scaling rule.
std::vector<Matrix> scaling_matrices(const AladinParams& params, const PartiallySeparableProblem& problem);

/// Damped BFGS state of one subsystem. H starts at the identity.
struct BfgsMemory {
  Matrix hessian;
  Vector previous_point;
  Vector previous_gradient;
  bool has_previous = false;
  bool scaled = false;

  static BfgsMemory identity(Index n);
};

/// Powell-damped BFGS update with threshold 0.2. The first call only stores the
/// pair; a zero displacement leaves the memory untouched.
void bfgs_update(BfgsMemory& memory, const Vector& point, const Vector& lagrangian_gradient);

/// Gradients of the constraints with |h_j| <= activity_tol at y, one row each.
/// `rows` receives the indices of the selected constraints when not null.
Matrix build_active_jacobian(const Subsystem& subsystem, const Vector& y, const Vector& kappa,
                             double activity_tol, std::vector<Index>* rows = nullptr);

/// grad k(y) + (C_exact - C_used)' kappa_active.
Vector modified_gradient(const Subsystem& subsystem, const Vector& y, const Vector& kappa_active,
                         const Matrix& c_exact, const Matrix& c_used);

struct StepResult {
  Vector x;
  Vector lambda;
};

StepResult step_update(const Vector& x, const Vector& lambda, const Vector& y, const Vector& dy,
                       const Vector& lambda_qp, double alpha1, double alpha2, double alpha3);

/// Gradient of k + kappa'h, the quantity tracked by the BFGS memory.
Vector local_lagrangian_gradient(const Subsystem& subsystem, const Vector& y, const Vector& kappa);

/// Exact Hessian of k + kappa'h, made positive definite: first by adding
/// c * C'C over the active rows (which leaves it unchanged on null(C)), then by
/// flooring the eigenvalues at `floor`.
Matrix regularized_exact_hessian(const Subsystem& subsystem, const Vector& y, const Vector& kappa,
                                 const Matrix& active_jacobian, double floor);

struct AladinState {
  std::vector<Vector> x;
  Vector lambda;
  std::vector<LocalSolution> local;
  std::optional<CoupledQpSolution> qp;
  std::vector<BfgsMemory> memory;
  int iteration = 0;
  double residual_l1 = kInf;
  double proximal_l1 = kInf;
  double mu = 0.0;
  bool terminal = false;
};

AladinState aladin_initial_state(const PartiallySeparableProblem& problem, const AladinParams& params,
                                 const Vector& initial = {}, const Vector& initial_lambda = {});

/// One pass of Algorithm 2 with the step sizes (alpha1, alpha2, alpha3)
/// given explicitly. The BFGS memory lives in the state.
AladinState aladin_iterate(const AladinState& state, const PartiallySeparableProblem& problem,
                           const AladinParams& params, CommLedger* ledger = nullptr);

struct AladinResult {
  Vector x;
  Vector lambda;
  double objective = 0.0;
  double residual_l1 = 0.0;
  int iterations = 0;
  int fallbacks = 0;
  SolveStatus status = SolveStatus::kMaxIterations;
  Trace trace;
};

AladinResult aladin_solve(const PartiallySeparableProblem& problem, const Vector& initial,
                          const AladinParams& params = {}, CommLedger* ledger = nullptr,
                          const Vector& initial_lambda = {});

}  // namespace distopt
