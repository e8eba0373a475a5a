#include "distopt/energy.hpp"

#include "distopt/oracle.hpp"
#include "distopt/random.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace distopt::energy {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

// Dropping a ratio term with a zero rate avoids the division.
double ratio(double value, double rate) { return rate == 0.0 ? 0.0 : value / rate; }

}  // namespace

void validate(const BatteryDevice& d) {
  if (!(d.alpha > 0.0 && d.alpha <= 1.0)) invalid("battery alpha must lie in (0, 1]");
  if (!(d.beta > 0.0 && d.beta <= 1.0)) invalid("battery beta must lie in (0, 1]");
  if (!(d.gamma > 0.0 && d.gamma <= 1.0)) invalid("battery gamma must lie in (0, 1]");
  if (!(d.capacity >= 0.0)) invalid("battery capacity must be nonnegative");
  if (!(d.u_max >= 0.0)) invalid("battery u_max must be nonnegative");
  if (!(d.u_min <= 0.0)) invalid("battery u_min must be nonpositive");
  if (!(d.sigma > 0.0)) invalid("battery sigma must be positive");
}

void validate(const FleetScenario& s) {
  if (s.devices.empty()) invalid("fleet has no devices");
  if (!(s.tau > 0.0)) invalid("sampling time must be positive");
  if (s.horizon < 1) invalid("horizon must be at least 1");
  if (!(s.sigma0 > 0.0)) invalid("sigma0 must be positive");
  if (s.forecasts.size() != s.devices.size()) invalid("one forecast per device required");
  if (s.x0.size() != s.devices.size()) invalid("one initial state per device required");
  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    validate(s.devices[i]);
    if (s.forecasts[i].size() < static_cast<std::size_t>(2 * s.horizon - 1)) {
      invalid("forecast of device " + std::to_string(i) + " is shorter than 2T-1");
    }
  }
}

double discharge_coefficient(const BatteryDevice& device) {
  return device.physical_discharge ? device.gamma : -device.gamma;
}

Simulation simulate_battery(const BatteryDevice& device, double x0, const Vector& u, double tau,
                            const Vector& w) {
  const Index steps = u.size() / 2;
  if (u.size() != 2 * steps || w.size() != steps) {
    throw Error(ErrorCode::kDimensionMismatch, "battery inputs must be (u+, u-) pairs matching w");
  }
  Simulation sim;
  sim.states.resize(steps + 1);
  sim.demand.resize(steps);
  sim.states(0) = x0;
  for (Index t = 0; t < steps; ++t) {
    const double up = u(2 * t);
    const double down = u(2 * t + 1);
    sim.states(t + 1) = device.alpha * sim.states(t) + tau * (device.beta * up + down);
    sim.demand(t) = w(t) + up + discharge_coefficient(device) * down;
  }
  return sim;
}

bool satisfies_constraints(const BatteryDevice& d, const Vector& states, const Vector& u, double tol) {
  const Index steps = u.size() / 2;
  for (Index t = 0; t < steps; ++t) {
    const double x = states(t + 1);
    const double up = u(2 * t);
    const double down = u(2 * t + 1);
    const double mix = ratio(down, d.u_min) + ratio(up, d.u_max);
    if (x < -tol || x > d.capacity + tol) return false;
    if (up < -tol || up > d.u_max + tol) return false;
    if (down < d.u_min - tol || down > tol) return false;
    if (mix < -tol || mix > 1.0 + tol) return false;
  }
  return true;
}

ConstraintMatrices build_constraint_matrices(const BatteryDevice& d, int horizon, double x0, double tau) {
  if (horizon < 1) invalid("horizon must be at least 1");
  const Index t_len = horizon;
  ConstraintMatrices out;
  out.d_matrix = Matrix::Zero(8 * t_len, 2 * t_len);
  out.d_vector = Vector::Zero(8 * t_len);
  // x(t+1) = alpha^{t+1} x0 + tau sum_{j<=t} alpha^{t-j} (beta u+(j) + u-(j))
  Matrix phi = Matrix::Zero(t_len, 2 * t_len);
  Vector free_response(t_len);
  for (Index t = 0; t < t_len; ++t) {
    free_response(t) = std::pow(d.alpha, static_cast<double>(t + 1)) * x0;
    for (Index j = 0; j <= t; ++j) {
      const double decay = tau * std::pow(d.alpha, static_cast<double>(t - j));
      phi(t, 2 * j) = decay * d.beta;
      phi(t, 2 * j + 1) = decay;
    }
  }
  for (Index t = 0; t < t_len; ++t) {
    const Index r = 8 * t;
    Matrix& dm = out.d_matrix;
    Vector& dv = out.d_vector;
    dm.row(r) = phi.row(t);
    dv(r) = d.capacity - free_response(t);
    dm.row(r + 1) = -phi.row(t);
    dv(r + 1) = free_response(t);
    dm(r + 2, 2 * t) = 1.0;
    dv(r + 2) = d.u_max;
    dm(r + 3, 2 * t) = -1.0;
    dm(r + 4, 2 * t + 1) = 1.0;
    dm(r + 5, 2 * t + 1) = -1.0;
    dv(r + 5) = -d.u_min;
    dm(r + 6, 2 * t) = ratio(1.0, d.u_max);
    dm(r + 6, 2 * t + 1) = ratio(1.0, d.u_min);
    dv(r + 6) = 1.0;
    dm(r + 7, 2 * t) = -ratio(1.0, d.u_max);
    dm(r + 7, 2 * t + 1) = -ratio(1.0, d.u_min);
  }
  return out;
}

Matrix build_cost_q(const BatteryDevice& device, int horizon, bool paper_sign) {
  if (horizon < 1) invalid("horizon must be at least 1");
  const double g = paper_sign ? device.gamma : discharge_coefficient(device);
  Matrix block(2, 2);
  block << 1.0, g, g, device.gamma * device.gamma;
  Matrix q = Matrix::Identity(2 * horizon, 2 * horizon);
  for (int t = 0; t < horizon; ++t) q.block(2 * t, 2 * t, 2, 2) += block;
  return device.sigma * q;
}

Matrix demand_map(const BatteryDevice& device, int horizon) {
  Matrix a = Matrix::Zero(horizon, 2 * horizon);
  for (int t = 0; t < horizon; ++t) {
    a(t, 2 * t) = 1.0;
    a(t, 2 * t + 1) = discharge_coefficient(device);
  }
  return a;
}

Vector sliding_average(const std::vector<std::vector<double>>& histories, int horizon, int t) {
  if (horizon < 1) invalid("horizon must be at least 1");
  if (t < horizon - 1) {
    throw Error(ErrorCode::kInvalidArgument, "sliding average needs t >= T-1 (insufficient history)");
  }
  Vector w(horizon);
  for (int s = 0; s < horizon; ++s) {
    const int end = t + s;
    double sum = 0.0;
    for (const auto& h : histories) {
      if (static_cast<int>(h.size()) <= end) {
        throw Error(ErrorCode::kInvalidArgument, "history too short for the sliding average window");
      }
      for (int j = end - horizon + 1; j <= end; ++j) sum += h[static_cast<std::size_t>(j)];
    }
    w(s) = sum / horizon;
  }
  return w;
}

PartiallySeparableProblem build_fleet_problem(const FleetScenario& scenario, int k) {
  return build_fleet_problem(scenario, k, scenario.x0);
}

PartiallySeparableProblem build_fleet_problem(const FleetScenario& scenario, int k,
                                              const std::vector<double>& states) {
  validate(scenario);
  const int t_len = scenario.horizon;
  const std::size_t n_dev = scenario.devices.size();
  if (states.size() != n_dev) invalid("one battery state per device required");
  for (std::size_t i = 0; i < n_dev; ++i) {
    const double c = scenario.devices[i].capacity;
    if (!(states[i] >= -1e-9 && states[i] <= c + 1e-9)) {
      throw Error(ErrorCode::kInfeasible, "initial state of device " + std::to_string(i) +
                                              " lies outside [0, capacity]")
          .with_subsystem(static_cast<Index>(i + 1));
    }
  }
  const Vector w_avg = sliding_average(scenario.forecasts, t_len, k);
  Vector w_bar = Vector::Zero(t_len);
  for (const auto& f : scenario.forecasts) {
    if (static_cast<int>(f.size()) < k + t_len) invalid("forecast does not cover the horizon");
    for (int s = 0; s < t_len; ++s) w_bar(s) += f[static_cast<std::size_t>(k + s)];
  }

  PartiallySeparableProblem p;
  p.b = -w_bar;
  const double n = static_cast<double>(n_dev);
  const double c0 = scenario.sigma0 / (t_len * n * n);
  Subsystem zbar;
  zbar.id = 0;
  zbar.dim = t_len;
  zbar.name = "consensus";
  zbar.objective = SmoothFunction::quadratic(2.0 * c0 * Matrix::Identity(t_len, t_len), -2.0 * c0 * w_avg,
                                             c0 * w_avg.squaredNorm());
  zbar.inequalities = ConstraintFunction::none();
  zbar.coupling = -Matrix::Identity(t_len, t_len);
  p.subsystems.push_back(std::move(zbar));

  for (std::size_t i = 0; i < n_dev; ++i) {
    const BatteryDevice& d = scenario.devices[i];
    const double x0 = std::min(std::max(states[i], 0.0), d.capacity);
    ConstraintMatrices cm = build_constraint_matrices(d, t_len, x0, scenario.tau);
    Subsystem s;
    s.id = static_cast<Index>(i + 1);
    s.dim = 2 * t_len;
    s.name = "battery" + std::to_string(i + 1);
    s.objective = SmoothFunction::quadratic(build_cost_q(d, t_len, scenario.paper_q_sign),
                                            Vector::Zero(2 * t_len));
    s.inequalities = ConstraintFunction::linear(cm.d_matrix, cm.d_vector);
    s.coupling = demand_map(d, t_len);
    p.subsystems.push_back(std::move(s));
  }
  return p;
}

double MpcRecord::deviation_variance() const {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (const MpcRow& r : rows) mean += r.zbar - r.w_avg;
  mean /= static_cast<double>(rows.size());
  double var = 0.0;
  for (const MpcRow& r : rows) var += (r.zbar - r.w_avg - mean) * (r.zbar - r.w_avg - mean);
  return var / static_cast<double>(rows.size());
}

MpcRecord mpc_loop(const FleetScenario& scenario, int steps, const MpcOptions& options) {
  if (steps < 1) invalid("MPC needs at least one step");
  validate(scenario);
  const int t_len = scenario.horizon;
  const int first = first_mpc_step(scenario);
  for (const auto& f : scenario.forecasts) {
    if (static_cast<int>(f.size()) < first + steps - 1 + t_len) {
      invalid("forecasts too short for " + std::to_string(steps) + " MPC steps");
    }
  }
  const std::size_t n_dev = scenario.devices.size();
  std::vector<double> states = scenario.x0;
  MpcRecord record;
  for (int step = 0; step < steps; ++step) {
    const int k = first + step;
    Vector x;
    try {
      const PartiallySeparableProblem problem = build_fleet_problem(scenario, k, states);
      switch (options.solver) {
        case FleetSolver::kAdmm: x = admm_solve(problem, {}, options.admm).x; break;
        case FleetSolver::kAladin: x = aladin_solve(problem, {}, options.aladin).x; break;
        case FleetSolver::kOracle: x = centralized_solve(problem).x; break;
      }
    } catch (const Error& e) {
      record.error = "step " + std::to_string(k) + ": " + e.what();
      return record;
    }
    MpcRow row;
    row.t = k;
    row.states = states;
    row.w_avg = sliding_average(scenario.forecasts, t_len, k)(0);
    row.zbar = 0.0;
    for (std::size_t i = 0; i < n_dev; ++i) {
      const BatteryDevice& d = scenario.devices[i];
      const Index off = t_len + 2 * t_len * static_cast<Index>(i);
      const double up = x(off);
      const double down = x(off + 1);
      row.charge.push_back(up);
      row.discharge.push_back(down);
      row.zbar += scenario.forecasts[i][static_cast<std::size_t>(k)] + up + discharge_coefficient(d) * down;
      const double next = d.alpha * states[i] + scenario.tau * (d.beta * up + down);
      states[i] = std::min(std::max(next, 0.0), d.capacity);
    }
    record.rows.push_back(std::move(row));
  }
  record.completed = true;
  return record;
}

void write_mpc_csv(std::ostream& out, const MpcRecord& record) {
  const std::size_t n = record.rows.empty() ? 0 : record.rows.front().states.size();
  out << "t,zbar,W";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i + 1 << ",u_plus" << i + 1 << ",u_minus" << i + 1;
  out << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const MpcRow& r : record.rows) {
    out << r.t << ',' << num(r.zbar) << ',' << num(r.w_avg);
    for (std::size_t i = 0; i < n; ++i) {
      out << ',' << num(r.states[i]) << ',' << num(r.charge[i]) << ',' << num(r.discharge[i]);
    }
    out << '\n';
  }
}

FleetScenario zero_capacity(const FleetScenario& scenario) {
  FleetScenario s = scenario;
  for (BatteryDevice& d : s.devices) d.capacity = 0.0;
  for (double& x : s.x0) x = 0.0;
  return s;
}

FleetScenario sinusoidal_fleet(int devices, int horizon, int length, std::uint64_t seed) {
  if (devices < 1 || horizon < 1 || length < 2 * horizon - 1) invalid("bad sinusoidal fleet size");
  Rng rng(seed);
  FleetScenario s;
  s.tau = 1.0;
  s.horizon = horizon;
  s.sigma0 = 100.0;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < devices; ++i) {
    BatteryDevice d;
    d.alpha = 0.99;
    d.beta = 0.95;
    d.gamma = 0.95;
    d.capacity = 4.0;
    d.u_max = 1.0;
    d.u_min = -1.0;
    d.sigma = 0.1;
    s.devices.push_back(d);
    s.x0.push_back(2.0);
    const double base = rng.uniform(0.5, 1.5);
    const double amp = rng.uniform(0.5, 1.0);
    const double phase = rng.uniform(-0.5, 0.5);
    std::vector<double> w(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
      w[static_cast<std::size_t>(t)] = base + amp * std::sin(2.0 * pi * t / 12.0 + phase) + rng.uniform(-0.05, 0.05);
    }
    s.forecasts.push_back(std::move(w));
  }
  return s;
}

}  // namespace distopt::energy
