#pragma once

#include <stdexcept>
#include <string>

namespace levy_rotor {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config = 2,
  io = 3,
  numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ExitCode::config, what) {}
};

// Request beyond what an evaluator was configured to support (e.g. Bessel order > max_order).
class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::io, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

// Raised by a single kick when the lattice lacks headroom; the caller grows the lattice and retries.
class LatticeGrowthRequired : public Error {
 public:
  explicit LatticeGrowthRequired(const std::string& what) : Error(ExitCode::numerical, what) {}
};

}  // namespace levy_rotor
