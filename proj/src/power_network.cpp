#include "distopt/power_network.hpp"

#include "distopt/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace distopt::opf {

using nlohmann::json;

ComplexMatrix PowerNetwork::admittance() const {
  const Index n = num_buses();
  ComplexMatrix y = ComplexMatrix::Zero(n, n);
  for (const Line& l : lines) {
    const std::complex<double> yl(l.g, l.b);
    y(l.from, l.to) -= yl;
    y(l.to, l.from) -= yl;
    y(l.from, l.from) += yl;
    y(l.to, l.to) += yl;
  }
  return y;
}

std::vector<Index> PowerNetwork::generators_at(Index bus) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].bus == bus) out.push_back(static_cast<Index>(i));
  }
  return out;
}

void validate(const PowerNetwork& net) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  const Index n = net.num_buses();
  if (n == 0) bad("network has no buses");
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (!(net.buses[i].v_min <= net.buses[i].v_max)) bad("bus " + std::to_string(i + 1) + ": vmin > vmax");
  }
  for (std::size_t i = 0; i < net.lines.size(); ++i) {
    const Line& l = net.lines[i];
    if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n || l.from == l.to) {
      bad("line " + std::to_string(i + 1) + ": invalid end buses");
    }
  }
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    const Generator& g = net.generators[i];
    const std::string tag = "generator " + std::to_string(i + 1);
    if (g.bus < 0 || g.bus >= n) bad(tag + ": invalid bus");
    if (!(g.p_min <= g.p_max)) bad(tag + ": pmin > pmax");
    if (!(g.q_min <= g.q_max)) bad(tag + ": qmin > qmax");
  }
}

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kParse, "case file: " + where + ": " + what);
}

double number(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  if (!it->is_number()) schema_error(where, std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

const json& array(const json& root, const char* key) {
  const auto it = root.find(key);
  if (it == root.end()) schema_error("top level", std::string("missing array '") + key + "'");
  if (!it->is_array()) schema_error("top level", std::string("'") + key + "' must be an array");
  return *it;
}

Index bus_index(const json& obj, const char* key, Index n, const std::string& where) {
  const double v = number(obj, key, where);
  const Index idx = static_cast<Index>(v);
  if (static_cast<double>(idx) != v || idx < 1 || idx > n) {
    schema_error(where, std::string("field '") + key + "' must be a bus number in 1.." + std::to_string(n));
  }
  return idx - 1;
}

}  // namespace

PowerNetwork parse_case_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("case file is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) schema_error("top level", "expected an object");
  PowerNetwork net;
  net.name = root.value("name", std::string("case"));
  const json& buses = array(root, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    if (!buses[i].is_object()) schema_error(where, "expected an object");
    Bus b;
    b.p_demand = number_or(buses[i], "pd", 0.0, where);
    b.q_demand = number_or(buses[i], "qd", 0.0, where);
    b.v_min = number_or(buses[i], "vmin", 0.9, where);
    b.v_max = number_or(buses[i], "vmax", 1.1, where);
    net.buses.push_back(b);
  }
  const Index n = net.num_buses();
  const json& lines = array(root, "lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "lines[" + std::to_string(i) + "]";
    const json& o = lines[i];
    if (!o.is_object()) schema_error(where, "expected an object");
    Line l;
    l.from = bus_index(o, "from", n, where);
    l.to = bus_index(o, "to", n, where);
    if (o.contains("g") || o.contains("b")) {
      l.g = number(o, "g", where);
      l.b = number(o, "b", where);
    } else {
      const auto [g, b] = series_admittance(number(o, "r", where), number(o, "x", where));
      l.g = g;
      l.b = b;
    }
    l.s_max = number_or(o, "smax", kInf, where);
    l.p_max = number_or(o, "pmax", kInf, where);
    if (l.s_max <= 0.0) l.s_max = kInf;
    if (l.p_max <= 0.0) l.p_max = kInf;
    net.lines.push_back(l);
  }
  const json& gens = array(root, "generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string where = "generators[" + std::to_string(i) + "]";
    const json& o = gens[i];
    if (!o.is_object()) schema_error(where, "expected an object");
    Generator g;
    g.bus = bus_index(o, "bus", n, where);
    g.p_min = number(o, "pmin", where);
    g.p_max = number(o, "pmax", where);
    g.q_min = number_or(o, "qmin", 0.0, where);
    g.q_max = number_or(o, "qmax", 0.0, where);
    g.alpha = number(o, "alpha", where);
    g.beta = number(o, "beta", where);
    g.gamma = number(o, "gamma", where);
    net.generators.push_back(g);
  }
  try {
    validate(net);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("case file: ") + e.what());
  }
  return net;
}

PowerNetwork parse_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case_json(ss.str());
}

std::string write_case_json(const PowerNetwork& net) {
  auto limit = [](double v) { return std::isfinite(v) ? json(v) : json(0.0); };
  json root;
  root["name"] = net.name;
  root["buses"] = json::array();
  for (const Bus& b : net.buses) {
    root["buses"].push_back({{"pd", b.p_demand}, {"qd", b.q_demand}, {"vmin", b.v_min}, {"vmax", b.v_max}});
  }
  root["lines"] = json::array();
  for (const Line& l : net.lines) {
    root["lines"].push_back({{"from", l.from + 1},
                             {"to", l.to + 1},
                             {"g", l.g},
                             {"b", l.b},
                             {"smax", limit(l.s_max)},
                             {"pmax", limit(l.p_max)}});
  }
  root["generators"] = json::array();
  for (const Generator& g : net.generators) {
    root["generators"].push_back({{"bus", g.bus + 1},
                                  {"pmin", g.p_min},
                                  {"pmax", g.p_max},
                                  {"qmin", g.q_min},
                                  {"qmax", g.q_max},
                                  {"alpha", g.alpha},
                                  {"beta", g.beta},
                                  {"gamma", g.gamma}});
  }
  return root.dump(2);
}

void write_case_file(const PowerNetwork& network, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write case file '" + path + "'");
  out << write_case_json(network) << '\n';
}

}  // namespace distopt::opf
