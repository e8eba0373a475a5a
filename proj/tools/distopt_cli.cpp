// Command-line driver over the C API.
#include "distopt/distopt.h"

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <optional>
#include <string>

namespace {

struct ConfigHandle {
  distopt_run_config* ptr = nullptr;
  ~ConfigHandle() { distopt_run_config_destroy(ptr); }
};

struct ResultHandle {
  distopt_run_result* ptr = nullptr;
  ~ResultHandle() { distopt_run_result_destroy(ptr); }
};

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed optimization with ADMM and ALADIN"};
  std::string scenario = "consensus_toy";
  std::string algorithm = "aladin";
  std::string out = "distopt_out";
  std::optional<double> rho, mu, eps, alpha1, alpha2, alpha3;
  std::optional<int> max_iter;
  std::uint64_t seed = 1;
  int mpc_steps = 0;
  bool compare = false;

  app.add_option("--scenario", scenario,
                 "consensus_toy | battery_fleet | dc_opf | ac_opf | multistage | path to a JSON file");
  app.add_option("--algorithm", algorithm, "admm | aladin | aladin_bfgs | oracle | compare");
  app.add_option("--rho", rho, "proximal weight (> 0 for ADMM)");
  app.add_option("--mu", mu, "ALADIN slack penalty (> 0)");
  app.add_option("--eps", eps, "termination tolerance (> 0)");
  app.add_option("--max-iter", max_iter, "iteration limit (>= 1)");
  app.add_option("--alpha1", alpha1, "ALADIN primal step toward y, in [0, 1]");
  app.add_option("--alpha2", alpha2, "ALADIN primal step along the QP direction, in [0, 1]");
  app.add_option("--alpha3", alpha3, "ALADIN dual step, in [0, 1]");
  app.add_option("--out", out, "artifact directory");
  app.add_option("--seed", seed, "seed for generated scenarios");
  app.add_option("--mpc-steps", mpc_steps, "closed-loop steps for battery fleets");
  app.add_flag("--compare", compare, "run ADMM and ALADIN side by side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  ConfigHandle cfg;
  if (distopt_run_config_create(&cfg.ptr) != DISTOPT_OK) {
    std::fprintf(stderr, "error: %s\n", distopt_last_error());
    return 1;
  }
  std::map<std::string, std::string> settings{{"scenario", scenario},
                                              {"algorithm", compare ? "compare" : algorithm},
                                              {"out", out},
                                              {"seed", std::to_string(seed)},
                                              {"mpc_steps", std::to_string(mpc_steps)}};
  const std::pair<const char*, const std::optional<double>*> doubles[] = {
      {"rho", &rho}, {"mu", &mu}, {"eps", &eps}, {"alpha1", &alpha1}, {"alpha2", &alpha2}, {"alpha3", &alpha3}};
  for (const auto& [key, value] : doubles) {
    if (*value) settings[key] = number(**value);
  }
  if (max_iter) settings["max_iter"] = std::to_string(*max_iter);
  for (const auto& [key, value] : settings) {
    if (distopt_run_config_set(cfg.ptr, key.c_str(), value.c_str()) != DISTOPT_OK) {
      std::fprintf(stderr, "error: %s\n", distopt_last_error());
      return 1;
    }
  }

  ResultHandle res;
  if (distopt_run_execute(cfg.ptr, &res.ptr) != DISTOPT_OK) {
    std::fprintf(stderr, "error: %s\n", distopt_last_error());
    return 1;
  }
  const int code = distopt_run_exit_code(res.ptr);
  if (code == 1) {
    std::fprintf(stderr, "error: %s\n", distopt_run_message(res.ptr));
    return 1;
  }
  double gap = 0.0;
  const bool has_gap = distopt_run_oracle_gap(res.ptr, &gap) != 0;
  std::printf("status=%s iterations=%d objective=%.12g", distopt_run_status(res.ptr), distopt_run_iterations(res.ptr),
              distopt_run_objective(res.ptr));
  if (has_gap) std::printf(" oracle_gap=%.3g", gap);
  std::printf("\n");
  return code;
}
