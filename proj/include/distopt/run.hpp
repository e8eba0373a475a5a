#pragma once

#include "distopt/scenarios.hpp"
#include "distopt/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace distopt {

enum class Algorithm { kAdmm, kAladin, kAladinBfgs, kOracle, kCompare };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct RunConfig {
  std::string scenario = "consensus_toy";
  Algorithm algorithm = Algorithm::kAladin;
  std::optional<double> rho;
  std::optional<double> mu;
  std::optional<double> epsilon;
  std::optional<int> max_iterations;
  std::optional<double> alpha1;
  std::optional<double> alpha2;
  std::optional<double> alpha3;
  /// Artifacts are written here when not empty; the directory is created.
  std::string out_dir;
  std::uint64_t seed = 1;
  /// Closed-loop steps for fleet scenarios; writes mpc.csv when > 0.
  int mpc_steps = 0;
};

/// Throws kInvalidArgument for overrides outside their documented ranges:
/// rho >= 0 (ADMM needs rho > 0), mu > 0, eps > 0, max_iter >= 1,
/// alphas in [0, 1], mpc_steps >= 0.
void validate(const RunConfig& config);

struct RunOutcome {
  int exit_code = 1;
  std::string status;
  double objective = 0.0;
  double residual_l1 = 0.0;
  int iterations = 0;
  std::optional<double> oracle_gap;
  /// compare only: first iteration with residual <= 1e-6, when reached.
  std::optional<int> admm_first_hit;
  std::optional<int> aladin_first_hit;
  std::string message;
};

/// First iteration of `trace` whose coupling residual is <= threshold.
std::optional<int> first_hit(const Trace& trace, double threshold);

/// Runs the configured algorithm and writes trace.csv, ledger.csv and
/// summary.json (plus compare.csv for compare, mpc.csv for closed loops).
/// Exit code 0 when converged, 2 at the iteration limit, 1 on any error; errors
/// are reported in `message` and never thrown.
RunOutcome run(const RunConfig& config);

}  // namespace distopt
