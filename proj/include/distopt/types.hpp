#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace distopt {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace distopt
