#include "distopt/distopt.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Scenario {
  distopt_scenario* ptr = nullptr;
  ~Scenario() { distopt_scenario_destroy(ptr); }
};
struct Options {
  distopt_options* ptr = nullptr;
  ~Options() { distopt_options_destroy(ptr); }
};
struct Result {
  distopt_result* ptr = nullptr;
  ~Result() { distopt_result_destroy(ptr); }
};

struct Cli {
  int exit_code = -1;
  std::string output;
};

Cli run_cli(const std::string& args) {
  const std::string command = std::string(DISTOPT_CLI_PATH) + " " + args + " 2>&1";
  Cli out;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) out.output += buf;
  const int status = pclose(pipe);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("distopt_capi_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(CApi, Version) { EXPECT_GT(std::string(distopt_version()).size(), 0u); }

TEST(CApi, ToyAladin) {
  Scenario s;
  ASSERT_EQ(distopt_scenario_create("consensus_toy", 1, &s.ptr), DISTOPT_OK);
  size_t subsystems = 0, dim = 0, rows = 0;
  ASSERT_EQ(distopt_scenario_dims(s.ptr, &subsystems, &dim, &rows), DISTOPT_OK);
  EXPECT_EQ(subsystems, 2u);
  EXPECT_EQ(dim, 2u);
  EXPECT_EQ(rows, 1u);
  Options o;
  ASSERT_EQ(distopt_options_create(&o.ptr), DISTOPT_OK);
  ASSERT_EQ(distopt_options_set(o.ptr, "eps", 1e-8), DISTOPT_OK);
  Result r;
  ASSERT_EQ(distopt_solve(s.ptr, "aladin", o.ptr, &r.ptr), DISTOPT_OK);
  EXPECT_EQ(distopt_result_converged(r.ptr), 1);
  EXPECT_NEAR(distopt_result_objective(r.ptr), 2.0, 1e-8);
  EXPECT_LE(distopt_result_iterations(r.ptr), 20);
  std::vector<double> x(2);
  ASSERT_EQ(distopt_result_solution(r.ptr, x.data(), x.size()), DISTOPT_OK);
  EXPECT_NEAR(x[0], 0.0, 1e-8);
  EXPECT_NEAR(x[1], 0.0, 1e-8);
  EXPECT_EQ(distopt_result_trace_length(r.ptr), static_cast<size_t>(distopt_result_iterations(r.ptr)));
  double last = -1.0;
  ASSERT_EQ(distopt_result_trace_residual(r.ptr, distopt_result_trace_length(r.ptr) - 1, &last), DISTOPT_OK);
  EXPECT_EQ(last, distopt_result_residual(r.ptr));
  EXPECT_EQ(distopt_result_trace_residual(r.ptr, 1000, &last), DISTOPT_ERR_INVALID_ARGUMENT);
}

TEST(CApi, AdmmAndOracle) {
  Scenario s;
  ASSERT_EQ(distopt_scenario_create("consensus_toy", 1, &s.ptr), DISTOPT_OK);
  for (const char* algorithm : {"admm", "aladin_bfgs", "oracle"}) {
    Result r;
    ASSERT_EQ(distopt_solve(s.ptr, algorithm, nullptr, &r.ptr), DISTOPT_OK) << algorithm;
    EXPECT_EQ(distopt_result_converged(r.ptr), 1) << algorithm;
    EXPECT_NEAR(distopt_result_objective(r.ptr), 2.0, 1e-5) << algorithm;
  }
}

TEST(CApi, Errors) {
  distopt_scenario* s = nullptr;
  EXPECT_EQ(distopt_scenario_create("nope", 1, &s), DISTOPT_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(s, nullptr);
  EXPECT_NE(std::string(distopt_last_error()).find("nope"), std::string::npos);
  EXPECT_EQ(distopt_scenario_create("consensus_toy", 1, nullptr), DISTOPT_ERR_NULL);
  Options o;
  ASSERT_EQ(distopt_options_create(&o.ptr), DISTOPT_OK);
  EXPECT_EQ(distopt_options_set(o.ptr, "unknown_key", 1.0), DISTOPT_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(distopt_options_set(o.ptr, "mu", -1.0), DISTOPT_ERR_INVALID_ARGUMENT);
  Scenario toy;
  ASSERT_EQ(distopt_scenario_create("consensus_toy", 1, &toy.ptr), DISTOPT_OK);
  Result r;
  EXPECT_EQ(distopt_solve(toy.ptr, "gradient", nullptr, &r.ptr), DISTOPT_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(distopt_solve(toy.ptr, "aladin", nullptr, &r.ptr), DISTOPT_OK);
  double one = 0.0;
  EXPECT_EQ(distopt_result_solution(r.ptr, &one, 1), DISTOPT_ERR_BUFFER);
  // Destroying null handles is a no-op.
  distopt_scenario_destroy(nullptr);
  distopt_result_destroy(nullptr);
}

TEST(CApi, ExpectedVolume) {
  const int64_t four[] = {4};
  int64_t up = 0, down = 0;
  ASSERT_EQ(distopt_expected_volume("aladin", four, 1, &up, &down), DISTOPT_OK);
  EXPECT_EQ(up, 22);
  EXPECT_EQ(down, 8);
  ASSERT_EQ(distopt_expected_volume("aladin_bfgs", four, 1, &up, &down), DISTOPT_OK);
  EXPECT_EQ(up, 16);
  ASSERT_EQ(distopt_expected_volume("admm", four, 1, &up, &down), DISTOPT_OK);
  EXPECT_EQ(up, 4);
  EXPECT_EQ(down, 4);
  EXPECT_EQ(distopt_expected_volume("sgd", four, 1, &up, &down), DISTOPT_ERR_INVALID_ARGUMENT);
}

TEST(CApi, RunConfig) {
  distopt_run_config* cfg = nullptr;
  ASSERT_EQ(distopt_run_config_create(&cfg), DISTOPT_OK);
  EXPECT_EQ(distopt_run_config_set(cfg, "scenario", "consensus_toy"), DISTOPT_OK);
  EXPECT_EQ(distopt_run_config_set(cfg, "eps", "1e-8"), DISTOPT_OK);
  EXPECT_EQ(distopt_run_config_set(cfg, "max_iter", "abc"), DISTOPT_ERR_PARSE);
  EXPECT_EQ(distopt_run_config_set(cfg, "colour", "blue"), DISTOPT_ERR_INVALID_ARGUMENT);
  distopt_run_result* res = nullptr;
  ASSERT_EQ(distopt_run_execute(cfg, &res), DISTOPT_OK);
  EXPECT_EQ(distopt_run_exit_code(res), 0);
  EXPECT_EQ(std::string(distopt_run_status(res)), "converged");
  double gap = -1.0;
  EXPECT_EQ(distopt_run_oracle_gap(res, &gap), 1);
  EXPECT_LE(gap, 1e-8);
  distopt_run_result_destroy(res);
  distopt_run_config_destroy(cfg);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("exit");
  const Cli ok = run_cli("--scenario consensus_toy --algorithm aladin --eps 1e-8 --out " + dir.string());
  EXPECT_EQ(ok.exit_code, 0) << ok.output;
  EXPECT_NE(ok.output.find("status=converged"), std::string::npos);
  for (const char* name : {"trace.csv", "ledger.csv", "summary.json"}) EXPECT_TRUE(fs::exists(dir / name)) << name;
  const Cli limit = run_cli("--scenario consensus_toy --algorithm admm --max-iter 1 --out " + dir.string());
  EXPECT_EQ(limit.exit_code, 2) << limit.output;
  const Cli unknown = run_cli("--scenario atlantis --out " + dir.string());
  EXPECT_EQ(unknown.exit_code, 1);
  EXPECT_NE(unknown.output.find("atlantis"), std::string::npos);
  const Cli bad_flag = run_cli("--rho notanumber");
  EXPECT_EQ(bad_flag.exit_code, 1);
  const Cli bad_range = run_cli("--alpha1 2 --out " + dir.string());
  EXPECT_EQ(bad_range.exit_code, 1);
  fs::remove_all(dir);
}

TEST(Cli, CompareIsDeterministic) {
  const fs::path a = fresh_dir("cmp_a"), b = fresh_dir("cmp_b");
  const Cli ra = run_cli("--scenario ac_opf --compare --out " + a.string());
  const Cli rb = run_cli("--scenario ac_opf --compare --out " + b.string());
  EXPECT_NE(ra.exit_code, 1) << ra.output;
  EXPECT_EQ(ra.output, rb.output);
  for (const char* name : {"compare.csv", "trace.csv", "ledger.csv", "summary.json"}) {
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, ScenarioFile) {
  const fs::path dir = fresh_dir("file");
  fs::create_directories(dir);
  const fs::path file = dir / "two_bus.json";
  std::ofstream(file) << R"({"model": "dc", "regions": [1, 2],
    "buses": [{"pd": 0, "qd": 0, "vmin": 0.9, "vmax": 1.1}, {"pd": 0.5, "qd": 0.1, "vmin": 0.9, "vmax": 1.1}],
    "lines": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1}],
    "generators": [{"bus": 1, "pmin": 0, "pmax": 2, "qmin": -1, "qmax": 1, "alpha": 1, "beta": -1, "gamma": 0}]})";
  const Cli r = run_cli("--scenario " + file.string() + " --algorithm aladin --eps 1e-9 --out " + (dir / "out").string());
  EXPECT_EQ(r.exit_code, 0) << r.output;
  // The generator covers the 0.5 load: 0.25 - 0.5.
  EXPECT_NE(r.output.find("objective=-0.25"), std::string::npos) << r.output;
  fs::remove_all(dir);
}
