#include "distopt/run.hpp"

#include "distopt/comms.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace distopt {

using nlohmann::ordered_json;

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kAdmm: return "admm";
    case Algorithm::kAladin: return "aladin";
    case Algorithm::kAladinBfgs: return "aladin_bfgs";
    case Algorithm::kOracle: return "oracle";
    case Algorithm::kCompare: return "compare";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kAdmm, Algorithm::kAladin, Algorithm::kAladinBfgs, Algorithm::kOracle,
                      Algorithm::kCompare}) {
    if (name == to_string(a)) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + name + "'");
}

void validate(const RunConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (c.rho && !(*c.rho >= 0.0 && std::isfinite(*c.rho))) bad("--rho must be >= 0");
  if (c.rho && *c.rho == 0.0 && (c.algorithm == Algorithm::kAdmm || c.algorithm == Algorithm::kCompare)) {
    bad("--rho must be > 0 for ADMM");
  }
  if (c.mu && !(*c.mu > 0.0 && std::isfinite(*c.mu))) bad("--mu must be > 0");
  if (c.epsilon && !(*c.epsilon > 0.0)) bad("--eps must be > 0");
  if (c.max_iterations && *c.max_iterations < 1) bad("--max-iter must be >= 1");
  for (const auto& a : {c.alpha1, c.alpha2, c.alpha3}) {
    if (a && !(*a >= 0.0 && *a <= 1.0)) bad("step sizes must lie in [0, 1]");
  }
  if (c.mpc_steps < 0) bad("--mpc-steps must be >= 0");
}

std::optional<int> first_hit(const Trace& trace, double threshold) {
  for (const IterationRecord& r : trace) {
    if (r.residual_l1 <= threshold) return r.iteration;
  }
  return std::nullopt;
}

namespace {

constexpr double kFirstHitThreshold = 1e-6;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "iteration,objective,residual_l1,proximal_l1,slack_norm\n";
  for (const IterationRecord& r : trace) {
    out << r.iteration << ',' << fmt(r.objective) << ',' << fmt(r.residual_l1) << ',' << fmt(r.proximal_l1) << ','
        << fmt(r.slack_norm) << '\n';
  }
}

void write_ledger(const std::filesystem::path& path, const AuditReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_audit_csv(out, report);
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

AdmmParams admm_params(const Scenario& s, const RunConfig& c) {
  AdmmParams p = s.admm;
  if (c.rho) p.rho = *c.rho;
  if (c.epsilon) p.epsilon = *c.epsilon;
  if (c.max_iterations) p.max_iterations = *c.max_iterations;
  return p;
}

AladinParams aladin_params(const Scenario& s, const RunConfig& c, bool bfgs) {
  AladinParams p = s.aladin;
  if (c.rho) p.rho = *c.rho;
  if (c.mu) p.mu = *c.mu;
  if (c.epsilon) p.epsilon = *c.epsilon;
  if (c.max_iterations) p.max_iterations = *c.max_iterations;
  if (c.alpha1) p.alpha1 = *c.alpha1;
  if (c.alpha2) p.alpha2 = *c.alpha2;
  if (c.alpha3) p.alpha3 = *c.alpha3;
  if (bfgs) p.hessian = HessianMode::kBfgs;
  return p;
}

struct Solved {
  std::string status;
  double objective = 0.0;
  double residual = 0.0;
  int iterations = 0;
  Trace trace;
  AuditReport audit;
  Volume traffic;
  bool converged = false;
};

Solved solve_distributed(const Scenario& s, const RunConfig& c, Algorithm a) {
  CommLedger ledger;
  Solved out;
  Variant variant = Variant::kAdmm;
  if (a == Algorithm::kAdmm) {
    const AdmmResult r = admm_solve(s.problem, s.initial, admm_params(s, c), &ledger);
    out = {to_string(r.status), r.objective, r.residual_l1, r.iterations, r.trace, {}, {}, r.status == SolveStatus::kConverged};
  } else {
    const bool bfgs = a == Algorithm::kAladinBfgs;
    variant = bfgs ? Variant::kAladinBfgs : Variant::kAladin;
    const AladinResult r = aladin_solve(s.problem, s.initial, aladin_params(s, c, bfgs), &ledger);
    out = {to_string(r.status), r.objective, r.residual_l1, r.iterations, r.trace, {}, {}, r.status == SolveStatus::kConverged};
  }
  out.audit = audit(ledger, variant, s.problem.dims());
  for (int it : ledger.iterations()) {
    const Volume v = ledger.totals(it);
    out.traffic.up += v.up;
    out.traffic.down += v.down;
  }
  return out;
}

ordered_json optional_json(const std::optional<int>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

RunOutcome run_impl(const RunConfig& c) {
  validate(c);
  const Scenario s = resolve_scenario(c.scenario, c.seed);
  const std::filesystem::path dir = c.out_dir;
  const bool write = !c.out_dir.empty();
  if (write) std::filesystem::create_directories(dir);

  OracleOptions oopts = s.oracle;
  oopts.seed = c.seed;
  const OracleResult oracle = centralized_solve(s.problem, s.initial, oopts);

  ordered_json summary;
  summary["scenario"] = s.name;
  summary["algorithm"] = to_string(c.algorithm);
  summary["seed"] = c.seed;
  summary["subsystems"] = s.problem.num_subsystems();
  summary["coupling_rows"] = s.problem.coupling_rows();

  RunOutcome outcome;
  if (c.algorithm == Algorithm::kOracle) {
    const bool ok = oracle.status == SqpStatus::kConverged;
    outcome.status = ok ? "converged" : "max_iter";
    outcome.objective = oracle.objective;
    outcome.residual_l1 = coupling_residual(s.problem, oracle.x).lpNorm<1>();
    outcome.iterations = oracle.iterations;
    outcome.oracle_gap = 0.0;
    outcome.exit_code = ok ? 0 : 2;
    if (write) {
      write_trace(dir / "trace.csv", {});
      write_ledger(dir / "ledger.csv", {});
    }
    summary["status"] = outcome.status;
    summary["iterations"] = outcome.iterations;
    summary["objective"] = outcome.objective;
    summary["residual_l1"] = outcome.residual_l1;
    summary["kkt_residual"] = oracle.report.max();
  } else if (c.algorithm == Algorithm::kCompare) {
    const Solved admm = solve_distributed(s, c, Algorithm::kAdmm);
    const Solved aladin = solve_distributed(s, c, Algorithm::kAladin);
    outcome.admm_first_hit = first_hit(admm.trace, kFirstHitThreshold);
    outcome.aladin_first_hit = first_hit(aladin.trace, kFirstHitThreshold);
    outcome.status = aladin.status;
    outcome.objective = aladin.objective;
    outcome.residual_l1 = aladin.residual;
    outcome.iterations = aladin.iterations;
    outcome.oracle_gap = std::abs(aladin.objective - oracle.objective);
    outcome.exit_code = admm.converged && aladin.converged ? 0 : 2;
    if (write) {
      std::ofstream out(dir / "compare.csv");
      if (!out) throw Error(ErrorCode::kIo, "cannot write compare.csv");
      out << "iteration,admm_residual_l1,aladin_residual_l1\n";
      const std::size_t rows = std::max(admm.trace.size(), aladin.trace.size());
      for (std::size_t k = 0; k < rows; ++k) {
        out << k << ',';
        if (k < admm.trace.size()) out << fmt(admm.trace[k].residual_l1);
        out << ',';
        if (k < aladin.trace.size()) out << fmt(aladin.trace[k].residual_l1);
        out << '\n';
      }
      write_trace(dir / "trace.csv", aladin.trace);
      write_ledger(dir / "ledger.csv", aladin.audit);
    }
    for (const auto& [key, solved, hit] : {std::tuple{"admm", &admm, outcome.admm_first_hit},
                                           std::tuple{"aladin", &aladin, outcome.aladin_first_hit}}) {
      summary[key] = {{"status", solved->status},
                      {"iterations", solved->iterations},
                      {"objective", solved->objective},
                      {"residual_l1", solved->residual},
                      {"first_hit_1e-6", optional_json(hit)},
                      {"oracle_gap", std::abs(solved->objective - oracle.objective)}};
    }
    summary["status"] = outcome.status;
    summary["iterations"] = outcome.iterations;
    summary["objective"] = outcome.objective;
    summary["residual_l1"] = outcome.residual_l1;
  } else {
    const Solved r = solve_distributed(s, c, c.algorithm);
    outcome.status = r.status;
    outcome.objective = r.objective;
    outcome.residual_l1 = r.residual;
    outcome.iterations = r.iterations;
    outcome.oracle_gap = std::abs(r.objective - oracle.objective);
    outcome.exit_code = r.converged ? 0 : 2;
    if (write) {
      write_trace(dir / "trace.csv", r.trace);
      write_ledger(dir / "ledger.csv", r.audit);
    }
    summary["status"] = outcome.status;
    summary["iterations"] = outcome.iterations;
    summary["objective"] = outcome.objective;
    summary["residual_l1"] = outcome.residual_l1;
    summary["uplink_scalars"] = r.traffic.up;
    summary["downlink_scalars"] = r.traffic.down;
    summary["ledger_ok"] = r.audit.ok();
  }
  summary["oracle_objective"] = oracle.objective;
  summary["oracle_status"] = to_string(oracle.status);
  summary["oracle_gap"] = *outcome.oracle_gap;

  if (c.mpc_steps > 0) {
    if (!s.fleet) throw Error(ErrorCode::kInvalidArgument, "--mpc-steps needs a battery fleet scenario");
    energy::MpcOptions mo;
    mo.solver = c.algorithm == Algorithm::kAdmm     ? energy::FleetSolver::kAdmm
                : c.algorithm == Algorithm::kOracle ? energy::FleetSolver::kOracle
                                                    : energy::FleetSolver::kAladin;
    mo.admm = admm_params(s, c);
    mo.aladin = aladin_params(s, c, c.algorithm == Algorithm::kAladinBfgs);
    const energy::MpcRecord rec = energy::mpc_loop(*s.fleet, c.mpc_steps, mo);
    if (write) {
      std::ofstream out(dir / "mpc.csv");
      if (!out) throw Error(ErrorCode::kIo, "cannot write mpc.csv");
      energy::write_mpc_csv(out, rec);
    }
    summary["mpc"] = {{"steps", rec.rows.size()},
                      {"completed", rec.completed},
                      {"deviation_variance", rec.deviation_variance()}};
    if (!rec.completed) {
      outcome.exit_code = 1;
      outcome.message = "closed loop stopped early: " + rec.error;
    }
  }
  if (write) write_json(dir / "summary.json", summary);
  return outcome;
}

}  // namespace

RunOutcome run(const RunConfig& config) {
  try {
    return run_impl(config);
  } catch (const std::exception& e) {
    RunOutcome out;
    out.exit_code = 1;
    out.status = "error";
    out.message = e.what();
    return out;
  }
}

}  // namespace distopt
