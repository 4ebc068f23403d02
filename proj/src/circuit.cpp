#include "htrl/circuit.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "htrl/error.hpp"

namespace htrl {

LevelMap levelize(std::size_t net_count, std::span<const Gate> gates,
                  std::span<const std::string> net_names) {
  std::vector<GateId> driver(net_count, kNoGate);
  std::vector<std::vector<GateId>> readers(net_count);
  for (GateId g = 0; g < gates.size(); ++g) {
    driver[gates[g].output] = g;
    for (NetId in : gates[g].inputs) readers[in].push_back(g);
  }

  LevelMap level(net_count, 0);
  std::vector<std::uint32_t> pending(gates.size(), 0);
  std::vector<GateId> ready;
  for (GateId g = 0; g < gates.size(); ++g) {
    for (NetId in : gates[g].inputs) {
      if (driver[in] != kNoGate) ++pending[g];
    }
    if (pending[g] == 0) ready.push_back(g);
  }

  std::size_t done = 0;
  while (!ready.empty()) {
    const GateId g = ready.back();
    ready.pop_back();
    ++done;
    std::uint32_t lvl = 0;
    for (NetId in : gates[g].inputs) lvl = std::max(lvl, level[in]);
    const NetId out = gates[g].output;
    level[out] = lvl + 1;
    for (GateId r : readers[out]) {
      if (--pending[r] == 0) ready.push_back(r);
    }
  }
  if (done == gates.size()) return level;

  // Walk backwards through unresolved gates until one repeats.
  GateId start = 0;
  while (pending[start] == 0) ++start;
  std::vector<GateId> path;
  std::vector<std::size_t> position(gates.size(), SIZE_MAX);
  GateId g = start;
  while (position[g] == SIZE_MAX) {
    position[g] = path.size();
    path.push_back(g);
    for (NetId in : gates[g].inputs) {
      const GateId d = driver[in];
      if (d != kNoGate && pending[d] != 0) {
        g = d;
        break;
      }
    }
  }
  std::vector<std::string> cycle;
  for (std::size_t i = position[g]; i < path.size(); ++i) {
    cycle.push_back(net_names[gates[path[i]].output]);
  }
  std::reverse(cycle.begin(), cycle.end());
  throw CombinationalLoopError(ErrorKind::CombinationalLoop, std::move(cycle));
}

Circuit::Circuit(const RawNetlist& netlist) : module_name_(netlist.module_name) {
  validate(netlist);

  const std::size_t n = netlist.net_count();
  names_.reserve(n);
  auto add_net = [&](const std::string& name) {
    const auto id = static_cast<NetId>(names_.size());
    names_.push_back(name);
    by_name_.emplace(name, id);
    return id;
  };
  input_index_.assign(n, UINT32_MAX);
  for (const auto& pi : netlist.ordered_inputs) {
    const NetId id = add_net(pi);
    input_index_[id] = static_cast<std::uint32_t>(inputs_.size());
    inputs_.push_back(id);
  }
  for (const auto& g : netlist.gates) add_net(g.output);

  gates_.reserve(netlist.gates.size());
  driver_.assign(n, kNoGate);
  for (const auto& raw : netlist.gates) {
    Gate gate{raw.kind, by_name_.at(raw.output), {}};
    gate.inputs.reserve(raw.inputs.size());
    for (const auto& in : raw.inputs) gate.inputs.push_back(by_name_.at(in));
    driver_[gate.output] = static_cast<GateId>(gates_.size());
    gates_.push_back(std::move(gate));
  }

  po_flag_.assign(n, 0);
  for (const auto& po : netlist.ordered_outputs) {
    const NetId id = by_name_.at(po);
    outputs_.push_back(id);
    po_flag_[id] = 1;
  }

  // Fanout lists in CSR form.
  fanout_offset_.assign(n + 1, 0);
  for (const auto& gate : gates_) {
    for (NetId in : gate.inputs) ++fanout_offset_[in + 1];
  }
  std::partial_sum(fanout_offset_.begin(), fanout_offset_.end(), fanout_offset_.begin());
  fanout_pins_.resize(fanout_offset_.back());
  std::vector<std::uint32_t> fill(fanout_offset_.begin(), fanout_offset_.end() - 1);
  for (GateId g = 0; g < gates_.size(); ++g) {
    const auto& ins = gates_[g].inputs;
    for (std::uint32_t pin = 0; pin < ins.size(); ++pin) {
      fanout_pins_[fill[ins[pin]]++] = FanoutPin{g, pin};
    }
  }

  levels_ = levelize(n, gates_, names_);
  max_level_ = levels_.empty() ? 0 : *std::max_element(levels_.begin(), levels_.end());

  topo_.resize(gates_.size());
  std::iota(topo_.begin(), topo_.end(), 0);
  std::stable_sort(topo_.begin(), topo_.end(), [&](GateId a, GateId b) {
    return levels_[gates_[a].output] < levels_[gates_[b].output];
  });

  level_offset_.assign(max_level_ + 2, 0);
  for (NetId id = 0; id < n; ++id) ++level_offset_[levels_[id] + 1];
  std::partial_sum(level_offset_.begin(), level_offset_.end(), level_offset_.begin());
  level_nets_.resize(n);
  std::vector<std::uint32_t> cursor(level_offset_.begin(), level_offset_.end() - 1);
  for (NetId id = 0; id < n; ++id) level_nets_[cursor[levels_[id]]++] = id;
}

std::optional<NetId> Circuit::find_net(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::span<const FanoutPin> Circuit::fanouts(NetId net) const {
  const auto begin = fanout_offset_.at(net);
  const auto end = fanout_offset_.at(net + 1);
  return std::span<const FanoutPin>(fanout_pins_).subspan(begin, end - begin);
}

std::span<const NetId> Circuit::nets_at_level(std::uint32_t level) const {
  if (level > max_level_) return {};
  const auto begin = level_offset_[level];
  const auto end = level_offset_[level + 1];
  return std::span<const NetId>(level_nets_).subspan(begin, end - begin);
}

RawNetlist Circuit::to_raw() const {
  RawNetlist raw;
  raw.module_name = module_name_;
  for (NetId pi : inputs_) raw.ordered_inputs.push_back(names_[pi]);
  for (NetId po : outputs_) raw.ordered_outputs.push_back(names_[po]);
  raw.gates.reserve(gates_.size());
  for (const auto& gate : gates_) {
    RawGate g{gate.kind, names_[gate.output], {}};
    for (NetId in : gate.inputs) g.inputs.push_back(names_[in]);
    raw.gates.push_back(std::move(g));
  }
  return raw;
}

std::vector<NetId> nets_at_level(const Circuit& circuit, std::uint32_t level) {
  const auto nets = circuit.nets_at_level(level);
  return {nets.begin(), nets.end()};
}

LevelMap levelize(const Circuit& circuit) {
  std::vector<std::string> names;
  names.reserve(circuit.net_count());
  for (NetId id = 0; id < circuit.net_count(); ++id) names.push_back(circuit.net_name(id));
  return levelize(circuit.net_count(), circuit.gates(), names);
}

void check_trojan_rules(const Circuit& circuit, const TrojanInstance& trojan) {
  const auto& triggers = trojan.trigger_nets;
  if (triggers.empty()) throw Error(ErrorKind::RuleViolation, "Trojan has no trigger nets");
  if (trojan.polarities.size() != triggers.size()) {
    throw Error(ErrorKind::RuleViolation, "one polarity per trigger net is required");
  }
  const auto n = circuit.net_count();
  if (trojan.target_net >= n) throw Error(ErrorKind::UnknownNet, "target net out of range");
  std::unordered_set<NetId> seen;
  for (std::size_t i = 0; i < triggers.size(); ++i) {
    const NetId t = triggers[i];
    if (t >= n) throw Error(ErrorKind::UnknownNet, "trigger net out of range");
    if (trojan.polarities[i] > 1) throw Error(ErrorKind::RuleViolation, "polarity must be 0 or 1");
    if (!seen.insert(t).second) {
      throw Error(ErrorKind::RuleViolation, "net '" + circuit.net_name(t) + "' used as two triggers");
    }
    if (t == trojan.target_net) {
      throw Error(ErrorKind::RuleViolation, "trigger '" + circuit.net_name(t) + "' is also the target");
    }
    if (circuit.level(t) >= circuit.level(trojan.target_net)) {
      throw Error(ErrorKind::RuleViolation,
                  "target level " + std::to_string(circuit.level(trojan.target_net)) +
                      " must exceed trigger '" + circuit.net_name(t) + "' level " +
                      std::to_string(circuit.level(t)));
    }
  }
}

namespace {

class NameAllocator {
 public:
  explicit NameAllocator(const RawNetlist& netlist) {
    for (const auto& pi : netlist.ordered_inputs) used_.insert(pi);
    for (const auto& g : netlist.gates) used_.insert(g.output);
  }

  std::string fresh(const std::string& base) {
    std::string name = base;
    for (int k = 1; used_.contains(name); ++k) name = base + "_" + std::to_string(k);
    used_.insert(name);
    return name;
  }

 private:
  std::unordered_set<std::string> used_;
};

}  // namespace

SpliceNames splice_into(RawNetlist& netlist, const std::vector<std::string>& triggers,
                        const std::vector<std::uint8_t>& polarities, const std::string& target,
                        std::string_view tag) {
  NameAllocator names(netlist);
  const std::string prefix(tag);

  auto target_gate = std::find_if(netlist.gates.begin(), netlist.gates.end(),
                                  [&](const RawGate& g) { return g.output == target; });
  if (target_gate == netlist.gates.end()) {
    throw Error(ErrorKind::UnknownNet, "target '" + target + "' is not a gate output");
  }
  const std::string source = names.fresh(target + "_" + prefix + "_src");
  target_gate->output = source;

  std::vector<std::string> signals;
  for (std::size_t i = 0; i < triggers.size(); ++i) {
    if (polarities.at(i) == 0) {
      const std::string inv = names.fresh(prefix + "_inv" + std::to_string(i));
      netlist.gates.push_back(RawGate{GateKind::Not, inv, {triggers[i]}});
      signals.push_back(inv);
    } else {
      signals.push_back(triggers[i]);
    }
  }

  // Balanced tree of 2-input ANDs.
  std::size_t and_index = 0;
  while (signals.size() > 1) {
    std::vector<std::string> next;
    for (std::size_t i = 0; i + 1 < signals.size(); i += 2) {
      const std::string out = names.fresh(prefix + "_and" + std::to_string(and_index++));
      netlist.gates.push_back(RawGate{GateKind::And, out, {signals[i], signals[i + 1]}});
      next.push_back(out);
    }
    if (signals.size() % 2 == 1) next.push_back(signals.back());
    signals = std::move(next);
  }

  netlist.gates.push_back(RawGate{GateKind::Xor, target, {source, signals.front()}});
  return SpliceNames{target, signals.front(), source};
}

SplicedCircuit splice_trojan(const Circuit& circuit, const TrojanInstance& trojan,
                             std::string_view tag) {
  check_trojan_rules(circuit, trojan);
  RawNetlist raw = circuit.to_raw();
  std::vector<std::string> triggers;
  for (NetId t : trojan.trigger_nets) triggers.push_back(circuit.net_name(t));
  const SpliceNames names =
      splice_into(raw, triggers, trojan.polarities, circuit.net_name(trojan.target_net), tag);
  try {
    Circuit spliced(raw);
    const NetId payload = *spliced.find_net(names.payload_out);
    const NetId trigger = *spliced.find_net(names.trigger_out);
    const NetId source = *spliced.find_net(names.target_source);
    return SplicedCircuit{std::move(spliced), payload, trigger, source};
  } catch (const CombinationalLoopError& e) {
    throw CombinationalLoopError(ErrorKind::CyclicResult, e.cycle());
  }
}

}  // namespace htrl
