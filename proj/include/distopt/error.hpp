#pragma once

#include "distopt/types.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace distopt {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kParse,
  kSolverFailure,
  kSingular,
  kInfeasible,
  kIo,
};

const char* to_string(ErrorCode code);

/// Library error. Carries the failing subsystem and iteration when known, and
/// optionally the last iterate of the computation that failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

  std::optional<Index> subsystem() const { return subsystem_; }
  std::optional<int> iteration() const { return iteration_; }
  const std::optional<Vector>& last_iterate() const { return last_iterate_; }

  Error& with_subsystem(Index id) {
    subsystem_ = id;
    return *this;
  }
  Error& with_iteration(int it) {
    iteration_ = it;
    return *this;
  }
  Error& with_last_iterate(Vector x) {
    last_iterate_ = std::move(x);
    return *this;
  }

 private:
  ErrorCode code_;
  std::optional<Index> subsystem_;
  std::optional<int> iteration_;
  std::optional<Vector> last_iterate_;
};

}  // namespace distopt
