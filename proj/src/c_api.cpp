#include "distopt/distopt.h"

#include "distopt/run.hpp"
#include "distopt/scenarios.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>

struct distopt_scenario {
  distopt::Scenario scenario;
};

struct distopt_options {
  std::optional<double> rho, mu, eps, max_iter, alpha1, alpha2, alpha3, mu_max, grow_mu, fallback;
};

struct distopt_result {
  distopt::Vector x;
  double objective = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  distopt::Trace trace;
};

struct distopt_run_config {
  distopt::RunConfig config;
};

struct distopt_run_result {
  distopt::RunOutcome outcome;
};

namespace {

thread_local std::string last_error;

distopt_status code_of(distopt::ErrorCode c) {
  switch (c) {
    case distopt::ErrorCode::kInvalidArgument: return DISTOPT_ERR_INVALID_ARGUMENT;
    case distopt::ErrorCode::kDimensionMismatch: return DISTOPT_ERR_DIMENSION;
    case distopt::ErrorCode::kParse: return DISTOPT_ERR_PARSE;
    case distopt::ErrorCode::kSolverFailure: return DISTOPT_ERR_SOLVER;
    case distopt::ErrorCode::kSingular: return DISTOPT_ERR_SINGULAR;
    case distopt::ErrorCode::kInfeasible: return DISTOPT_ERR_INFEASIBLE;
    case distopt::ErrorCode::kIo: return DISTOPT_ERR_IO;
  }
  return DISTOPT_ERR_INTERNAL;
}

distopt_status fail(distopt_status s, const std::string& what) {
  last_error = what;
  return s;
}

template <class F>
distopt_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return DISTOPT_OK;
  } catch (const distopt::Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(DISTOPT_ERR_INTERNAL, e.what());
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw distopt::Error(distopt::ErrorCode::kParse, "'" + key + "' expects a number, got '" + value + "'");
}

long long parse_integer(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw distopt::Error(distopt::ErrorCode::kParse,
                         "'" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

}  // namespace

extern "C" {

const char* distopt_version(void) { return "1.0.0"; }

const char* distopt_last_error(void) { return last_error.c_str(); }

distopt_status distopt_scenario_create(const char* name, uint64_t seed, distopt_scenario** out) {
  if (!name || !out) return fail(DISTOPT_ERR_NULL, "null argument");
  return guarded([&] { *out = new distopt_scenario{distopt::resolve_scenario(name, seed)}; });
}

void distopt_scenario_destroy(distopt_scenario* scenario) { delete scenario; }

distopt_status distopt_scenario_dims(const distopt_scenario* s, size_t* subsystems, size_t* total_dim,
                                     size_t* coupling_rows) {
  if (!s) return fail(DISTOPT_ERR_NULL, "null scenario");
  if (subsystems) *subsystems = static_cast<size_t>(s->scenario.problem.num_subsystems());
  if (total_dim) *total_dim = static_cast<size_t>(s->scenario.problem.total_dim());
  if (coupling_rows) *coupling_rows = static_cast<size_t>(s->scenario.problem.coupling_rows());
  return DISTOPT_OK;
}

distopt_status distopt_options_create(distopt_options** out) {
  if (!out) return fail(DISTOPT_ERR_NULL, "null argument");
  *out = new distopt_options{};
  return DISTOPT_OK;
}

void distopt_options_destroy(distopt_options* options) { delete options; }

distopt_status distopt_options_set(distopt_options* o, const char* key, double value) {
  if (!o || !key) return fail(DISTOPT_ERR_NULL, "null argument");
  const std::string k = key;
  std::optional<double>* slot = k == "rho"        ? &o->rho
                                : k == "mu"       ? &o->mu
                                : k == "eps"      ? &o->eps
                                : k == "max_iter" ? &o->max_iter
                                : k == "alpha1"   ? &o->alpha1
                                : k == "alpha2"   ? &o->alpha2
                                : k == "alpha3"   ? &o->alpha3
                                : k == "mu_max"   ? &o->mu_max
                                : k == "grow_mu"  ? &o->grow_mu
                                : k == "fallback" ? &o->fallback
                                                  : nullptr;
  if (!slot) return fail(DISTOPT_ERR_INVALID_ARGUMENT, "unknown option '" + k + "'");
  bool valid = std::isfinite(value);
  if (k == "rho") valid = valid && value >= 0.0;
  if (k == "mu" || k == "eps" || k == "mu_max") valid = valid && value > 0.0;
  if (k == "max_iter") valid = valid && value >= 1.0 && value == std::floor(value);
  if (k == "alpha1" || k == "alpha2" || k == "alpha3") valid = valid && value >= 0.0 && value <= 1.0;
  if (!valid) return fail(DISTOPT_ERR_INVALID_ARGUMENT, "option '" + k + "' out of range");
  *slot = value;
  return DISTOPT_OK;
}

distopt_status distopt_solve(const distopt_scenario* s, const char* algorithm, const distopt_options* o,
                             distopt_result** out) {
  if (!s || !algorithm || !out) return fail(DISTOPT_ERR_NULL, "null argument");
  const distopt_options opts = o ? *o : distopt_options{};
  return guarded([&] {
    using namespace distopt;
    const Scenario& sc = s->scenario;
    const std::string a = algorithm;
    auto r = std::make_unique<distopt_result>();
    if (a == "admm") {
      AdmmParams p = sc.admm;
      if (opts.rho) p.rho = *opts.rho;
      if (opts.eps) p.epsilon = *opts.eps;
      if (opts.max_iter) p.max_iterations = static_cast<int>(*opts.max_iter);
      const AdmmResult res = admm_solve(sc.problem, sc.initial, p);
      *r = {res.x, res.objective, res.residual_l1, res.iterations, res.status == SolveStatus::kConverged, res.trace};
    } else if (a == "aladin" || a == "aladin_bfgs") {
      AladinParams p = sc.aladin;
      if (a == "aladin_bfgs") p.hessian = HessianMode::kBfgs;
      if (opts.rho) p.rho = *opts.rho;
      if (opts.mu) p.mu = *opts.mu;
      if (opts.eps) p.epsilon = *opts.eps;
      if (opts.max_iter) p.max_iterations = static_cast<int>(*opts.max_iter);
      if (opts.alpha1) p.alpha1 = *opts.alpha1;
      if (opts.alpha2) p.alpha2 = *opts.alpha2;
      if (opts.alpha3) p.alpha3 = *opts.alpha3;
      if (opts.mu_max) p.mu_max = *opts.mu_max;
      if (opts.grow_mu) p.grow_mu = *opts.grow_mu != 0.0;
      if (opts.fallback) p.fallback = *opts.fallback != 0.0;
      const AladinResult res = aladin_solve(sc.problem, sc.initial, p);
      *r = {res.x, res.objective, res.residual_l1, res.iterations, res.status == SolveStatus::kConverged, res.trace};
    } else if (a == "oracle") {
      OracleOptions p = sc.oracle;
      if (opts.eps) p.tolerance = *opts.eps;
      if (opts.max_iter) p.max_iterations = static_cast<int>(*opts.max_iter);
      const OracleResult res = centralized_solve(sc.problem, sc.initial, p);
      *r = {res.x, res.objective, coupling_residual(sc.problem, res.x).lpNorm<1>(), res.iterations,
            res.status == SqpStatus::kConverged, {}};
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + a + "'");
    }
    *out = r.release();
  });
}

void distopt_result_destroy(distopt_result* result) { delete result; }

int distopt_result_converged(const distopt_result* r) { return r && r->converged ? 1 : 0; }
double distopt_result_objective(const distopt_result* r) { return r ? r->objective : 0.0; }
double distopt_result_residual(const distopt_result* r) { return r ? r->residual : 0.0; }
int distopt_result_iterations(const distopt_result* r) { return r ? r->iterations : 0; }

distopt_status distopt_result_solution(const distopt_result* r, double* buffer, size_t len) {
  if (!r || !buffer) return fail(DISTOPT_ERR_NULL, "null argument");
  if (len < static_cast<size_t>(r->x.size())) return fail(DISTOPT_ERR_BUFFER, "buffer too small");
  std::memcpy(buffer, r->x.data(), sizeof(double) * static_cast<size_t>(r->x.size()));
  return DISTOPT_OK;
}

size_t distopt_result_trace_length(const distopt_result* r) { return r ? r->trace.size() : 0; }

distopt_status distopt_result_trace_residual(const distopt_result* r, size_t k, double* value) {
  if (!r || !value) return fail(DISTOPT_ERR_NULL, "null argument");
  if (k >= r->trace.size()) return fail(DISTOPT_ERR_INVALID_ARGUMENT, "trace row out of range");
  *value = r->trace[k].residual_l1;
  return DISTOPT_OK;
}

distopt_status distopt_expected_volume(const char* variant, const int64_t* dims, size_t count, int64_t* up,
                                       int64_t* down) {
  if (!variant || (!dims && count > 0) || !up || !down) return fail(DISTOPT_ERR_NULL, "null argument");
  return guarded([&] {
    std::vector<distopt::Index> d(dims, dims + count);
    const distopt::Volume v = distopt::expected_volume(distopt::parse_variant(variant), d);
    *up = v.up;
    *down = v.down;
  });
}

distopt_status distopt_run_config_create(distopt_run_config** out) {
  if (!out) return fail(DISTOPT_ERR_NULL, "null argument");
  *out = new distopt_run_config{};
  return DISTOPT_OK;
}

void distopt_run_config_destroy(distopt_run_config* config) { delete config; }

distopt_status distopt_run_config_set(distopt_run_config* c, const char* key, const char* value) {
  if (!c || !key || !value) return fail(DISTOPT_ERR_NULL, "null argument");
  return guarded([&] {
    const std::string k = key;
    const std::string v = value;
    distopt::RunConfig& rc = c->config;
    if (k == "scenario") {
      rc.scenario = v;
    } else if (k == "algorithm") {
      rc.algorithm = distopt::parse_algorithm(v);
    } else if (k == "rho") {
      rc.rho = parse_double(k, v);
    } else if (k == "mu") {
      rc.mu = parse_double(k, v);
    } else if (k == "eps") {
      rc.epsilon = parse_double(k, v);
    } else if (k == "max_iter") {
      rc.max_iterations = static_cast<int>(parse_integer(k, v));
    } else if (k == "alpha1") {
      rc.alpha1 = parse_double(k, v);
    } else if (k == "alpha2") {
      rc.alpha2 = parse_double(k, v);
    } else if (k == "alpha3") {
      rc.alpha3 = parse_double(k, v);
    } else if (k == "out") {
      rc.out_dir = v;
    } else if (k == "seed") {
      const long long s = parse_integer(k, v);
      if (s < 0) throw distopt::Error(distopt::ErrorCode::kInvalidArgument, "'seed' must be nonnegative");
      rc.seed = static_cast<std::uint64_t>(s);
    } else if (k == "mpc_steps") {
      rc.mpc_steps = static_cast<int>(parse_integer(k, v));
    } else {
      throw distopt::Error(distopt::ErrorCode::kInvalidArgument, "unknown run setting '" + k + "'");
    }
  });
}

distopt_status distopt_run_execute(const distopt_run_config* c, distopt_run_result** out) {
  if (!c || !out) return fail(DISTOPT_ERR_NULL, "null argument");
  return guarded([&] { *out = new distopt_run_result{distopt::run(c->config)}; });
}

void distopt_run_result_destroy(distopt_run_result* result) { delete result; }
int distopt_run_exit_code(const distopt_run_result* r) { return r ? r->outcome.exit_code : 1; }
const char* distopt_run_status(const distopt_run_result* r) { return r ? r->outcome.status.c_str() : ""; }
const char* distopt_run_message(const distopt_run_result* r) { return r ? r->outcome.message.c_str() : ""; }
double distopt_run_objective(const distopt_run_result* r) { return r ? r->outcome.objective : 0.0; }
int distopt_run_iterations(const distopt_run_result* r) { return r ? r->outcome.iterations : 0; }

int distopt_run_oracle_gap(const distopt_run_result* r, double* value) {
  if (!r || !value || !r->outcome.oracle_gap) return 0;
  *value = *r->outcome.oracle_gap;
  return 1;
}

}  // extern "C"
