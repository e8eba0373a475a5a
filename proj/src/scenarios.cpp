#include "distopt/scenarios.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace distopt {

using nlohmann::json;

namespace {

Subsystem quadratic_block(Index id, double center, double sign) {
  Subsystem s;
  s.id = id;
  s.dim = 1;
  s.name = "block" + std::to_string(id + 1);
  s.objective = SmoothFunction::quadratic(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -2.0 * center),
                                          center * center);
  s.inequalities = ConstraintFunction::none();
  s.coupling = Matrix::Constant(1, 1, sign);
  return s;
}

Scenario consensus_toy() {
  Scenario s;
  s.name = "consensus_toy";
  s.problem.subsystems = {quadratic_block(0, 1.0, 1.0), quadratic_block(1, -1.0, -1.0)};
  s.problem.b = Vector::Zero(1);
  s.initial = Vector::Zero(2);
  return s;
}

Scenario fleet_scenario(energy::FleetScenario fleet, const std::string& name) {
  Scenario s;
  s.name = name;
  s.problem = energy::build_fleet_problem(fleet, energy::first_mpc_step(fleet));
  s.initial = Vector::Zero(s.problem.total_dim());
  s.fleet = std::move(fleet);
  s.aladin.rho = 100.0;
  s.aladin.mu = 1e5;
  return s;
}

Scenario network_scenario(const opf::PowerNetwork& net, const std::vector<Index>& regions, opf::FlowModel model,
                          const std::string& name) {
  Scenario s;
  s.name = name;
  const opf::Partition part = opf::partition_network(net, regions);
  opf::DistributedModel dm = model == opf::FlowModel::kAc ? opf::build_distributed_acopf(net, part)
                                                          : opf::build_distributed_dcopf(net, part);
  s.problem = std::move(dm.problem);
  s.initial = dm.initial;
  s.network = net;
  s.convex = model == opf::FlowModel::kDc;
  if (!s.convex) s.oracle.multistart = 5;
  // Auxiliary injections carry no cost, so ALADIN needs a proximal weight well
  // above 1 here. The DC angle multipliers are large, which ADMM only reaches
  // with a large rho and many iterations.
  s.aladin.rho = 10.0;
  s.aladin.mu = 1e5;
  if (s.convex) {
    s.admm.rho = 1e4;
    s.admm.max_iterations = 20000;
  }
  return s;
}

Scenario multistage_scenario() {
  const opf::PowerNetwork net = opf::four_bus_chain();
  opf::MultiStageSpec spec;
  spec.stages = 3;
  spec.demand_scale = {1.0, 1.1, 0.9};
  spec.ramp_down.assign(net.generators.size(), -0.3);
  spec.ramp_up.assign(net.generators.size(), 0.3);
  opf::DistributedModel dm = opf::build_multistage_acopf(net, spec);
  Scenario s;
  s.name = "multistage";
  s.problem = std::move(dm.problem);
  s.initial = dm.initial;
  s.network = net;
  s.convex = false;
  s.oracle.multistart = 5;
  s.aladin.rho = 10.0;
  s.aladin.mu = 1e5;
  return s;
}

[[noreturn]] void fleet_error(const std::string& what) { throw Error(ErrorCode::kParse, "fleet file: " + what); }

double get_number(const json& o, const char* key, const std::string& where) {
  if (!o.contains(key)) fleet_error(where + ": missing field '" + key + "'");
  if (!o[key].is_number()) fleet_error(where + ": field '" + key + "' must be a number");
  return o[key].get<double>();
}

std::vector<double> number_array(const json& a, const std::string& where) {
  if (!a.is_array()) fleet_error(where + " must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) fleet_error(where + "[" + std::to_string(i) + "] must be a number");
    out.push_back(a[i].get<double>());
  }
  return out;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, "scenario file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"consensus_toy", "battery_fleet", "dc_opf", "ac_opf", "multistage"};
}

Scenario builtin_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "consensus_toy") return consensus_toy();
  if (name == "battery_fleet") return fleet_scenario(energy::sinusoidal_fleet(3, 4, 96, seed), name);
  if (name == "dc_opf") return network_scenario(opf::pjm_five_bus(), {0, 0, 0, 1, 1}, opf::FlowModel::kDc, name);
  if (name == "ac_opf") return network_scenario(opf::four_bus_chain(), {0, 0, 1, 1}, opf::FlowModel::kAc, name);
  if (name == "multistage") return multistage_scenario();
  throw Error(ErrorCode::kInvalidArgument, "unknown scenario '" + name + "'");
}

energy::FleetScenario parse_fleet_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("fleet file is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fleet_error("expected an object");
  energy::FleetScenario s;
  if (!root.contains("devices") || !root["devices"].is_array()) fleet_error("missing array 'devices'");
  const json& devices = root["devices"];
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string where = "devices[" + std::to_string(i) + "]";
    const json& d = devices[i];
    if (!d.is_object()) fleet_error(where + ": expected an object");
    energy::BatteryDevice dev;
    dev.alpha = get_number(d, "alpha", where);
    dev.beta = get_number(d, "beta", where);
    dev.gamma = get_number(d, "gamma", where);
    dev.capacity = get_number(d, "capacity", where);
    dev.u_max = get_number(d, "u_max", where);
    dev.u_min = get_number(d, "u_min", where);
    dev.sigma = get_number(d, "sigma", where);
    s.devices.push_back(dev);
  }
  s.tau = get_number(root, "tau", "top level");
  const double horizon = get_number(root, "horizon", "top level");
  if (horizon != static_cast<double>(static_cast<int>(horizon))) fleet_error("horizon must be an integer");
  s.horizon = static_cast<int>(horizon);
  s.sigma0 = get_number(root, "sigma0", "top level");
  if (!root.contains("forecasts") || !root["forecasts"].is_array()) fleet_error("missing array 'forecasts'");
  for (std::size_t i = 0; i < root["forecasts"].size(); ++i) {
    s.forecasts.push_back(number_array(root["forecasts"][i], "forecasts[" + std::to_string(i) + "]"));
  }
  if (!root.contains("x0")) fleet_error("missing array 'x0'");
  s.x0 = number_array(root["x0"], "x0");
  s.paper_q_sign = root.value("paper_q_sign", false);
  const bool physical = root.value("physical_discharge", false);
  for (auto& dev : s.devices) dev.physical_discharge = physical;
  try {
    energy::validate(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("fleet file: ") + e.what());
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  const json root = read_json(path);
  const std::string stem = std::filesystem::path(path).stem().string();
  if (root.is_object() && root.contains("devices")) return fleet_scenario(parse_fleet_json(root.dump()), stem);
  if (root.is_object() && root.contains("buses")) {
    const opf::PowerNetwork net = opf::parse_case_json(root.dump());
    opf::FlowModel model = opf::FlowModel::kAc;
    if (root.contains("model")) {
      const json& m = root["model"];
      if (m == "dc") {
        model = opf::FlowModel::kDc;
      } else if (m != "ac") {
        throw Error(ErrorCode::kParse, "case file: 'model' must be \"ac\" or \"dc\"");
      }
    }
    std::vector<Index> regions(static_cast<std::size_t>(net.num_buses()), 0);
    if (root.contains("regions")) {
      const json& r = root["regions"];
      if (!r.is_array() || r.size() != regions.size()) {
        throw Error(ErrorCode::kParse, "case file: 'regions' must list one region per bus");
      }
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!r[i].is_number_integer() || r[i].get<long long>() < 1) {
          throw Error(ErrorCode::kParse, "case file: regions[" + std::to_string(i) + "] must be a positive integer");
        }
        regions[i] = static_cast<Index>(r[i].get<long long>() - 1);
      }
    }
    return network_scenario(net, regions, model, stem);
  }
  throw Error(ErrorCode::kParse, "scenario file '" + path + "' has neither 'devices' nor 'buses'");
}

Scenario resolve_scenario(const std::string& name_or_path, std::uint64_t seed) {
  for (const std::string& n : builtin_scenario_names()) {
    if (n == name_or_path) return builtin_scenario(n, seed);
  }
  if (std::filesystem::is_regular_file(name_or_path)) return load_scenario_file(name_or_path);
  throw Error(ErrorCode::kInvalidArgument, "unknown scenario '" + name_or_path + "'");
}

}  // namespace distopt
