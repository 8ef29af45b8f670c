#pragma once

#include <stdexcept>
#include <string>

namespace dads {

/// Malformed arguments: dimension mismatches, out-of-range sizes.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition (e.g. a strictly feasible Slater point) does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The request is valid but beyond what the implementation supports.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario or trace text that cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which modelling assumption a scenario violates.
enum class Assumption { kNonDegeneracy = 1, kBalanced = 2, kPeriodicConnectivity = 3, kSlater = 5 };

inline std::string to_string(Assumption a) {
  switch (a) {
    case Assumption::kNonDegeneracy:
      return "Assumption 1 (non-degeneracy)";
    case Assumption::kBalanced:
      return "Assumption 2 (balanced communication)";
    case Assumption::kPeriodicConnectivity:
      return "Assumption 3 (periodic strong connectivity)";
    case Assumption::kSlater:
      return "Slater condition";
  }
  return "unknown assumption";
}

class AssumptionViolation : public std::runtime_error {
 public:
  AssumptionViolation(Assumption which, const std::string& detail)
      : std::runtime_error(to_string(which) + " violated: " + detail), which_(which) {}

  Assumption which() const noexcept { return which_; }

 private:
  Assumption which_;
};

}  // namespace dads
