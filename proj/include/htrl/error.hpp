#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace htrl {

enum class ErrorKind {
  // netlist_io
  UnsupportedConstruct,
  MultipleDrivers,
  UndeclaredNet,
  EmptyModule,
  LengthMismatch,
  IllegalCharacter,
  UnknownNet,
  // circuit_graph
  CombinationalLoop,
  CyclicResult,
  RuleViolation,
  // logic_sim
  WidthMismatch,
  InterfaceMismatch,
  // rl_engine
  ShapeMismatch,
  EnvContractViolation,
  NonFiniteLoss,
  // insertion_env
  InfeasibleReset,
  // evaluation
  DomainError,
  ManifestMismatch,
  PopulationMismatch,
  // harness
  Usage,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every recoverable failure in the library. Callers
/// dispatch on kind() rather than on the dynamic type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when levelization finds a cycle; carries the net names on it.
class CombinationalLoopError : public Error {
 public:
  CombinationalLoopError(ErrorKind kind, std::vector<std::string> cycle);

  [[nodiscard]] const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

}  // namespace htrl
