#ifndef BRANCHSIM_ERRORS_HPP
#define BRANCHSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace branchsim {

/// Raised when two objects cannot be composed: shape mismatch, duplicate or
/// unknown subsystem names, dimension disagreements.
class CompositionError : public std::invalid_argument {
 public:
  explicit CompositionError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Raised when a caller violates an operation precondition (unnormalized
/// input, register not in its ready state, empty branch set, ...).
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Raised when a run-time physical condition makes the result meaningless
/// (wave spread past the grid edge, packets still overlapping, zero
/// post-selected mass, trajectory leaving the grid).
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for invalid run configurations; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace branchsim

#endif  // BRANCHSIM_ERRORS_HPP
