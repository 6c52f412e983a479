#pragma once

#include <stdexcept>
#include <string>

namespace mosp {

/// An oracle returned a non-finite value or gradient.
class OracleFailure : public std::runtime_error {
 public:
  explicit OracleFailure(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver hit its iteration cap before reaching tolerance.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual, long iterations)
      : std::runtime_error(what + " (residual=" + std::to_string(residual) +
                           ", iterations=" + std::to_string(iterations) + ")"),
        residual(residual),
        iterations(iterations) {}
  double residual;
  long iterations;
};

/// The requested problem has no feasible point.
class InfeasibleProblem : public std::runtime_error {
 public:
  explicit InfeasibleProblem(const std::string& what) : std::runtime_error(what) {}
};

/// A node did not receive an expected message in a synchronous round.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(int sender, int slot)
      : std::runtime_error("missing message from node " + std::to_string(sender) +
                           " for slot " + std::to_string(slot)),
        sender(sender),
        slot(slot) {}
  int sender;
  int slot;
};

/// Bad configuration file or flag value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : std::runtime_error(what), key(std::move(key)), line(line) {}
  std::string key;
  int line;
};

}  // namespace mosp
