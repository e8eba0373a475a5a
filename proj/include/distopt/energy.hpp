#pragma once

#include "distopt/admm.hpp"
#include "distopt/aladin.hpp"
#include "distopt/problem.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace distopt::energy {

struct BatteryDevice {
  double alpha = 1.0;     // self-discharge factor
  double beta = 1.0;      // charge efficiency
  double gamma = 1.0;     // discharge conversion
  double capacity = 0.0;
  double u_max = 0.0;     // >= 0
  double u_min = 0.0;     // <= 0
  double sigma = 1.0;
  /// Demand z = w + u+ + gamma u-, so discharging lowers demand. The default
  /// follows the displayed z = w + u+ - gamma u-.
  bool physical_discharge = false;
};

void validate(const BatteryDevice& device);

/// Coefficient of u- in the demand equation: -gamma, or +gamma when physical.
double discharge_coefficient(const BatteryDevice& device);

struct FleetScenario {
  std::vector<BatteryDevice> devices;
  double tau = 1.0;
  int horizon = 1;
  double sigma0 = 1.0;
  /// forecasts[i][t]: net consumption of device i at absolute time t.
  std::vector<std::vector<double>> forecasts;
  std::vector<double> x0;
  /// Use the off-diagonal +gamma in Q_i instead of the -gamma obtained by
  /// substituting the demand equation.
  bool paper_q_sign = false;
};

void validate(const FleetScenario& scenario);

struct Simulation {
  Vector states;  // x(0..T)
  Vector demand;  // z(0..T-1)
};

/// u interleaved as (u+(0), u-(0), u+(1), u-(1), ...); w of length T.
Simulation simulate_battery(const BatteryDevice& device, double x0, const Vector& u, double tau,
                            const Vector& w);

/// True when states and inputs satisfy the box and mixed-rate constraints
/// directly, within `tol`.
bool satisfies_constraints(const BatteryDevice& device, const Vector& states, const Vector& u, double tol);

struct ConstraintMatrices {
  Matrix d_matrix;  // 8T x 2T
  Vector d_vector;  // 8T
};

/// Condensed rows per step t, for the state x(t+1):
///   x <= C, -x <= 0, u+ <= u_max, -u+ <= 0, u- <= 0, -u- <= -u_min,
///   u-/u_min + u+/u_max <= 1, -(u-/u_min + u+/u_max) <= 0
/// Ratio terms with a zero rate are dropped.
ConstraintMatrices build_constraint_matrices(const BatteryDevice& device, int horizon, double x0, double tau);

/// sigma I + sigma I_T (x) [[1, c], [c, g^2]] with c = discharge_coefficient
/// (or c = +g with paper_sign).
Matrix build_cost_q(const BatteryDevice& device, int horizon, bool paper_sign = false);

/// T x 2T map from u to u+ + c u-, c = discharge_coefficient.
Matrix demand_map(const BatteryDevice& device, int horizon);

/// (W(t), ..., W(t+T-1)) with W(s) = 1/T sum_{j=s-T+1..s} sum_i w_i(j).
Vector sliding_average(const std::vector<std::vector<double>>& histories, int horizon, int t);

/// Fleet problem at time k from the given battery states. Subsystem 0 holds
/// zbar with cost sigma0/(T N^2) ||zbar - W||^2 and A_0 = -I; subsystem i holds
/// u_i with cost 0.5 u'Q_i u, D_i u <= d_i and A_i = demand_map; b = -wbar.
PartiallySeparableProblem build_fleet_problem(const FleetScenario& scenario, int k,
                                              const std::vector<double>& states);
PartiallySeparableProblem build_fleet_problem(const FleetScenario& scenario, int k);

/// First time index at which a fleet problem can be built.
inline int first_mpc_step(const FleetScenario& s) { return s.horizon - 1; }

enum class FleetSolver { kAdmm, kAladin, kOracle };

struct MpcRow {
  int t = 0;
  double zbar = 0.0;
  double w_avg = 0.0;
  std::vector<double> states;       // before applying the control
  std::vector<double> charge;       // u+
  std::vector<double> discharge;    // u-
};

struct MpcRecord {
  std::vector<MpcRow> rows;
  bool completed = false;
  std::string error;
  /// Variance of zbar - W over the recorded rows.
  double deviation_variance() const;
};

struct MpcOptions {
  FleetSolver solver = FleetSolver::kAladin;
  AdmmParams admm;
  AladinParams aladin;
};

/// Closed loop from k = T-1: build, solve, apply the first control, advance.
/// A solver failure stops the loop and leaves a partial record.
MpcRecord mpc_loop(const FleetScenario& scenario, int steps, const MpcOptions& options = {});

void write_mpc_csv(std::ostream& out, const MpcRecord& record);

/// Same scenario with every capacity set to zero.
FleetScenario zero_capacity(const FleetScenario& scenario);

/// Sinusoidal test fleet; deterministic for a given seed.
FleetScenario sinusoidal_fleet(int devices, int horizon, int length, std::uint64_t seed);

}  // namespace distopt::energy
