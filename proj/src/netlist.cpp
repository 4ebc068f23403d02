#include "htrl/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "htrl/error.hpp"

namespace htrl {

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::And: return "and";
    case GateKind::Nand: return "nand";
    case GateKind::Or: return "or";
    case GateKind::Nor: return "nor";
    case GateKind::Xor: return "xor";
    case GateKind::Xnor: return "xnor";
    case GateKind::Not: return "not";
    case GateKind::Buf: return "buf";
    case GateKind::Const0: return "const0";
    case GateKind::Const1: return "const1";
  }
  return "?";
}

std::optional<GateKind> parse_gate_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "and") return GateKind::And;
  if (lower == "nand") return GateKind::Nand;
  if (lower == "or") return GateKind::Or;
  if (lower == "nor") return GateKind::Nor;
  if (lower == "xor") return GateKind::Xor;
  if (lower == "xnor") return GateKind::Xnor;
  if (lower == "not" || lower == "inv") return GateKind::Not;
  if (lower == "buf" || lower == "buff") return GateKind::Buf;
  return std::nullopt;
}

void validate(const RawNetlist& netlist) {
  if (netlist.ordered_inputs.empty() && netlist.gates.empty()) {
    throw Error(ErrorKind::EmptyModule, "module '" + netlist.module_name + "' has no logic");
  }

  std::unordered_set<std::string> driven;
  for (const auto& pi : netlist.ordered_inputs) {
    if (!driven.insert(pi).second) {
      throw Error(ErrorKind::MultipleDrivers, "input '" + pi + "' declared twice");
    }
  }
  for (const auto& gate : netlist.gates) {
    const std::size_t arity = gate.inputs.size();
    const bool ok = is_constant(gate.kind)                                    ? arity == 0
                    : (gate.kind == GateKind::Not || gate.kind == GateKind::Buf) ? arity == 1
                                                                               : arity >= 1;
    if (!ok) {
      throw Error(ErrorKind::UnsupportedConstruct,
                  std::string(to_string(gate.kind)) + " gate driving '" + gate.output + "' has " +
                      std::to_string(arity) + " inputs");
    }
    if (!driven.insert(gate.output).second) {
      throw Error(ErrorKind::MultipleDrivers, "net '" + gate.output + "' has more than one driver");
    }
  }
  for (const auto& gate : netlist.gates) {
    for (const auto& in : gate.inputs) {
      if (!driven.contains(in)) {
        throw Error(ErrorKind::UndeclaredNet,
                    "net '" + in + "' read by gate '" + gate.output + "' is never driven");
      }
    }
  }
  std::unordered_set<std::string> seen_po;
  for (const auto& po : netlist.ordered_outputs) {
    if (!driven.contains(po)) {
      throw Error(ErrorKind::UndeclaredNet, "output '" + po + "' is never driven");
    }
    if (!seen_po.insert(po).second) {
      throw Error(ErrorKind::UnsupportedConstruct, "output '" + po + "' declared twice");
    }
  }
}

}  // namespace htrl
