#pragma once

#include "distopt/types.hpp"

#include <complex>
#include <string>
#include <vector>

namespace distopt::opf {

using ComplexMatrix = Eigen::MatrixXcd;

struct Bus {
  double p_demand = 0.0;
  double q_demand = 0.0;
  double v_min = 0.9;
  double v_max = 1.1;
};

/// Line between buses `from` and `to` (0-based) with series admittance g + jb.
/// Limits <= 0 or infinite mean unlimited.
struct Line {
  Index from = 0;
  Index to = 0;
  double g = 0.0;
  double b = 0.0;
  double s_max = kInf;
  double p_max = kInf;
};

struct Generator {
  Index bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
};

/// Bus 0 is the reference bus.
struct PowerNetwork {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;

  Index num_buses() const { return static_cast<Index>(buses.size()); }
  Index num_generators() const { return static_cast<Index>(generators.size()); }

  /// Y_lk = -(g + jb) for every line (l, k); Y_ll = sum of incident g + jb.
  ComplexMatrix admittance() const;
  Matrix conductance() const { return admittance().real(); }
  Matrix susceptance() const { return admittance().imag(); }

  /// Generators located at bus l.
  std::vector<Index> generators_at(Index bus) const;
};

/// Series admittance of a line with resistance r and reactance x.
inline std::pair<double, double> series_admittance(double r, double x) {
  const double d = r * r + x * x;
  return {r / d, -x / d};
}

/// Throws kInvalidArgument for out-of-range indices or unordered bounds.
void validate(const PowerNetwork& network);

/// JSON case format:
///   {"name": ..., "buses": [{"pd", "qd", "vmin", "vmax"}],
///    "lines": [{"from", "to", "g", "b", "smax"?, "pmax"?}]  (or "r", "x" instead of "g", "b"),
///    "generators": [{"bus", "pmin", "pmax", "qmin", "qmax", "alpha", "beta", "gamma"}]}
/// Bus numbers in the file are 1-based. Errors name the entry and field.
PowerNetwork parse_case_json(const std::string& text);
PowerNetwork parse_case_file(const std::string& path);
std::string write_case_json(const PowerNetwork& network);
void write_case_file(const PowerNetwork& network, const std::string& path);

}  // namespace distopt::opf
