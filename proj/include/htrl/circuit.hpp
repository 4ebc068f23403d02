#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "htrl/netlist.hpp"

namespace htrl {

using NetId = std::uint32_t;
using GateId = std::uint32_t;
using TestVector = std::vector<std::uint8_t>;  // one 0/1 entry per primary input

inline constexpr GateId kNoGate = UINT32_MAX;

struct Gate {
  GateKind kind;
  NetId output;
  std::vector<NetId> inputs;
};

struct FanoutPin {
  GateId gate;
  std::uint32_t pin;
};

using LevelMap = std::vector<std::uint32_t>;

/// Level of every net (longest path from the primary inputs, inputs at 0).
/// Throws CombinationalLoopError carrying a witness cycle.
LevelMap levelize(std::size_t net_count, std::span<const Gate> gates,
                  std::span<const std::string> net_names);

/// Immutable levelized combinational circuit. Net IDs are dense and follow
/// declaration order: primary inputs first, then gate outputs in source order.
class Circuit {
 public:
  explicit Circuit(const RawNetlist& netlist);

  [[nodiscard]] const std::string& module_name() const noexcept { return module_name_; }
  [[nodiscard]] std::size_t net_count() const noexcept { return names_.size(); }
  [[nodiscard]] std::size_t gate_count() const noexcept { return gates_.size(); }

  [[nodiscard]] const std::string& net_name(NetId net) const { return names_.at(net); }
  [[nodiscard]] std::optional<NetId> find_net(std::string_view name) const;

  [[nodiscard]] std::span<const NetId> inputs() const noexcept { return inputs_; }
  [[nodiscard]] std::span<const NetId> outputs() const noexcept { return outputs_; }
  [[nodiscard]] bool is_input(NetId net) const { return driver_.at(net) == kNoGate; }
  [[nodiscard]] bool is_output(NetId net) const { return po_flag_.at(net) != 0; }
  /// Position of a primary input in the declared port order.
  [[nodiscard]] std::uint32_t input_index(NetId net) const { return input_index_.at(net); }

  [[nodiscard]] const Gate& gate(GateId id) const { return gates_.at(id); }
  [[nodiscard]] std::span<const Gate> gates() const noexcept { return gates_; }
  /// Driving gate of a net, or kNoGate for primary inputs.
  [[nodiscard]] GateId driver(NetId net) const { return driver_.at(net); }
  [[nodiscard]] std::span<const FanoutPin> fanouts(NetId net) const;

  [[nodiscard]] std::uint32_t level(NetId net) const { return levels_.at(net); }
  [[nodiscard]] const LevelMap& levels() const noexcept { return levels_; }
  [[nodiscard]] std::uint32_t max_level() const noexcept { return max_level_; }

  /// Gates sorted by output level (ties by gate ID); a valid evaluation order.
  [[nodiscard]] std::span<const GateId> topological_gates() const noexcept { return topo_; }

  /// Ascending-ID list of nets at exactly `level`; empty past max_level().
  [[nodiscard]] std::span<const NetId> nets_at_level(std::uint32_t level) const;

  /// Rebuilds the source-level description (used for emission and splicing).
  [[nodiscard]] RawNetlist to_raw() const;

 private:
  std::string module_name_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, NetId> by_name_;
  std::vector<NetId> inputs_;
  std::vector<NetId> outputs_;
  std::vector<std::uint32_t> input_index_;
  std::vector<std::uint8_t> po_flag_;
  std::vector<Gate> gates_;
  std::vector<GateId> driver_;
  std::vector<std::uint32_t> fanout_offset_;
  std::vector<FanoutPin> fanout_pins_;
  LevelMap levels_;
  std::uint32_t max_level_ = 0;
  std::vector<GateId> topo_;
  std::vector<std::uint32_t> level_offset_;
  std::vector<NetId> level_nets_;
};

/// Free-function form of Circuit::nets_at_level.
std::vector<NetId> nets_at_level(const Circuit& circuit, std::uint32_t level);

/// Recomputes the level map of an existing circuit.
LevelMap levelize(const Circuit& circuit);

/// A combinational Trojan: AND of the trigger nets at their rare polarities,
/// XOR payload on the target net.
struct TrojanInstance {
  std::vector<NetId> trigger_nets;
  std::vector<std::uint8_t> polarities;  // value each trigger must hold to fire
  NetId target_net = 0;
  NetId payload_out = 0;  // XOR output in the spliced circuit; set by splice
  std::uint32_t rare_trigger_count = 0;
  std::optional<TestVector> activation_vector;
};

/// Throws RuleViolation / UnknownNet when the instance breaks the structural
/// insertion rules against `circuit`.
void check_trojan_rules(const Circuit& circuit, const TrojanInstance& trojan);

struct SplicedCircuit {
  Circuit circuit;
  NetId payload_out;   // XOR output, carries the target's original name
  NetId trigger_out;   // root of the trigger AND tree
  NetId target_source; // the original target driver, renamed
};

/// Inserts the Trojan: the target's fanouts and PO status move to
/// XOR(target, AND(triggers)). Inverters precede triggers with polarity 0.
/// The input circuit is untouched.
SplicedCircuit splice_trojan(const Circuit& circuit, const TrojanInstance& trojan,
                             std::string_view tag = "ht");

/// Appends the Trojan logic to a raw netlist, by net name. Shared by
/// splice_trojan and multi-Trojan emission.
struct SpliceNames {
  std::string payload_out;
  std::string trigger_out;
  std::string target_source;
};
SpliceNames splice_into(RawNetlist& netlist, const std::vector<std::string>& triggers,
                        const std::vector<std::uint8_t>& polarities, const std::string& target,
                        std::string_view tag);

}  // namespace htrl
