#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace htrl {

enum class GateKind : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf, Const0, Const1 };

std::string_view to_string(GateKind kind);
std::optional<GateKind> parse_gate_kind(std::string_view name);

/// True for kinds whose output is the complement of the underlying AND/OR/XOR/BUF.
constexpr bool is_inverting(GateKind kind) noexcept {
  return kind == GateKind::Nand || kind == GateKind::Nor || kind == GateKind::Xnor ||
         kind == GateKind::Not;
}

constexpr bool is_constant(GateKind kind) noexcept {
  return kind == GateKind::Const0 || kind == GateKind::Const1;
}

struct RawGate {
  GateKind kind;
  std::string output;
  std::vector<std::string> inputs;

  bool operator==(const RawGate&) const = default;
};

/// Flattened combinational netlist exactly as declared in a source file.
struct RawNetlist {
  std::string module_name;
  std::vector<std::string> ordered_inputs;
  std::vector<std::string> ordered_outputs;
  std::vector<RawGate> gates;

  [[nodiscard]] std::size_t net_count() const { return ordered_inputs.size() + gates.size(); }
};

/// Checks the driver/reference invariants. Throws Error with kind
/// MultipleDrivers, UndeclaredNet, UnsupportedConstruct or EmptyModule.
void validate(const RawNetlist& netlist);

}  // namespace htrl
