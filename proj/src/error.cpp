#include "htrl/error.hpp"

namespace htrl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorKind::MultipleDrivers: return "MultipleDrivers";
    case ErrorKind::UndeclaredNet: return "UndeclaredNet";
    case ErrorKind::EmptyModule: return "EmptyModule";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::IllegalCharacter: return "IllegalCharacter";
    case ErrorKind::UnknownNet: return "UnknownNet";
    case ErrorKind::CombinationalLoop: return "CombinationalLoop";
    case ErrorKind::CyclicResult: return "CyclicResult";
    case ErrorKind::RuleViolation: return "RuleViolation";
    case ErrorKind::WidthMismatch: return "WidthMismatch";
    case ErrorKind::InterfaceMismatch: return "InterfaceMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EnvContractViolation: return "EnvContractViolation";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::InfeasibleReset: return "InfeasibleReset";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::ManifestMismatch: return "ManifestMismatch";
    case ErrorKind::PopulationMismatch: return "PopulationMismatch";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string describe_cycle(const std::vector<std::string>& cycle) {
  std::string out = "cycle through";
  for (const auto& name : cycle) out += " " + name;
  return out;
}

}  // namespace

CombinationalLoopError::CombinationalLoopError(ErrorKind kind, std::vector<std::string> cycle)
    : Error(kind, describe_cycle(cycle)), cycle_(std::move(cycle)) {}

}  // namespace htrl
