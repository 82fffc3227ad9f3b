#pragma once

#include <stdexcept>
#include <string>

namespace gpfel {

// Precondition / argument errors (dimension mismatches, bad indices, ...).
struct ContractViolation : std::invalid_argument {
  explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

// Gram matrix not factorizable after jitter escalation, negative variance
// beyond tolerance, and similar numerical breakdowns.
struct NumericalDegeneracy : std::runtime_error {
  explicit NumericalDegeneracy(const std::string& msg) : std::runtime_error(msg) {}
};

// Simulated state left the finite domain.
struct DivergenceFault : std::runtime_error {
  explicit DivergenceFault(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gpfel
