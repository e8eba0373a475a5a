#pragma once

#include "distopt/admm.hpp"
#include "distopt/aladin.hpp"
#include "distopt/energy.hpp"
#include "distopt/opf.hpp"
#include "distopt/oracle.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace distopt {

/// A ready-to-solve instance with its start point and default parameters.
struct Scenario {
  std::string name;
  PartiallySeparableProblem problem;
  Vector initial;
  bool convex = true;
  AdmmParams admm;
  AladinParams aladin;
  OracleOptions oracle;
  std::optional<energy::FleetScenario> fleet;
  std::optional<opf::PowerNetwork> network;
};

/// Names accepted by `builtin_scenario`.
std::vector<std::string> builtin_scenario_names();

/// consensus_toy:  k1 = (z-1)^2, k2 = (z+1)^2, z1 - z2 = 0.
/// battery_fleet:  sinusoidal fleet with N = 3, T = 4 at its first MPC step.
/// dc_opf:         PJM 5-bus DC-OPF, regions {A, B, C} and {D, E}.
/// ac_opf:         4-bus chain AC-OPF, regions {1, 2} and {3, 4}.
/// multistage:     4-bus chain over 3 stages (demand 1, 1.1, 0.9; ramps 0.3).
/// The seed only affects generated data (battery_fleet).
Scenario builtin_scenario(const std::string& name, std::uint64_t seed = 1);

/// Fleet file: {devices: [{alpha, beta, gamma, capacity, u_max, u_min, sigma}],
/// tau, horizon, sigma0, forecasts: [[...]], x0: [...]} plus optional booleans
/// paper_q_sign and physical_discharge.
energy::FleetScenario parse_fleet_json(const std::string& text);

/// Loads a fleet file (top-level "devices") or a network case file (top-level
/// "buses", with optional "model": "ac" | "dc" and "regions": 1-based region
/// per bus, all buses in one region by default).
Scenario load_scenario_file(const std::string& path);

/// Built-in name or, failing that, a readable file. Unknown names throw
/// kInvalidArgument.
Scenario resolve_scenario(const std::string& name_or_path, std::uint64_t seed = 1);

}  // namespace distopt
