#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "htrl/netlist_io.hpp"

#ifndef HTRL_SOURCE_DIR
#define HTRL_SOURCE_DIR "."
#endif

namespace htrl::test {

RawNetlist random_netlist(Rng& rng, const RandomCircuitShape& shape) {
  static constexpr GateKind kKinds[] = {GateKind::And, GateKind::Nand, GateKind::Or,
                                        GateKind::Nor, GateKind::Xor,  GateKind::Xnor,
                                        GateKind::Not, GateKind::Buf};
  RawNetlist n;
  n.module_name = "rnd";
  std::vector<std::string> nets;
  for (std::size_t i = 0; i < shape.inputs; ++i) {
    n.ordered_inputs.push_back("i" + std::to_string(i));
    nets.push_back(n.ordered_inputs.back());
  }
  for (std::size_t g = 0; g < shape.gates; ++g) {
    RawGate gate;
    gate.kind = kKinds[rng.uniform(std::size(kKinds))];
    gate.output = "g" + std::to_string(g);
    std::size_t fanin = 1;
    if (gate.kind != GateKind::Not && gate.kind != GateKind::Buf) {
      fanin = 2 + rng.uniform(std::max<std::size_t>(shape.max_fanin, 2) - 1);
    }
    // Bias toward recent nets so circuits get depth.
    for (std::size_t k = 0; k < fanin; ++k) {
      const std::size_t window = std::min<std::size_t>(nets.size(), 12);
      const bool recent = rng.uniform(3) != 0;
      const std::size_t pick = recent ? nets.size() - 1 - rng.uniform(window) : rng.uniform(nets.size());
      const std::string& in = nets[pick];
      if (std::find(gate.inputs.begin(), gate.inputs.end(), in) == gate.inputs.end()) {
        gate.inputs.push_back(in);
      }
    }
    if (gate.inputs.size() == 1 && gate.kind != GateKind::Not && gate.kind != GateKind::Buf) {
      gate.kind = rng.uniform(2) ? GateKind::Not : GateKind::Buf;
    }
    nets.push_back(gate.output);
    n.gates.push_back(std::move(gate));
  }
  const std::size_t outs = std::min(shape.outputs, shape.gates);
  for (std::size_t k = 0; k < outs; ++k) n.ordered_outputs.push_back(n.gates[shape.gates - 1 - k].output);
  return n;
}

std::map<std::string, std::uint8_t> reference_eval(
    const RawNetlist& netlist, const std::vector<std::uint8_t>& inputs,
    const std::map<std::string, std::uint8_t>& overrides) {
  std::map<std::string, const RawGate*> driver;
  for (const auto& g : netlist.gates) driver[g.output] = &g;
  std::map<std::string, std::uint8_t> value;
  for (std::size_t i = 0; i < netlist.ordered_inputs.size(); ++i) {
    value[netlist.ordered_inputs[i]] = inputs.at(i) & 1U;
  }
  for (const auto& [name, v] : overrides) value[name] = v;
  std::function<std::uint8_t(const std::string&)> eval = [&](const std::string& net) -> std::uint8_t {
    if (auto it = value.find(net); it != value.end()) return it->second;
    const RawGate& g = *driver.at(net);
    std::vector<std::uint8_t> in;
    for (const auto& i : g.inputs) in.push_back(eval(i));
    std::uint8_t out = 0;
    switch (g.kind) {
      case GateKind::And:
      case GateKind::Nand:
        out = 1;
        for (auto b : in) out &= b;
        break;
      case GateKind::Or:
      case GateKind::Nor:
        for (auto b : in) out |= b;
        break;
      case GateKind::Xor:
      case GateKind::Xnor:
        for (auto b : in) out ^= b;
        break;
      case GateKind::Not:
      case GateKind::Buf: out = in.at(0); break;
      case GateKind::Const0: out = 0; break;
      case GateKind::Const1: out = 1; break;
    }
    if (g.kind == GateKind::Nand || g.kind == GateKind::Nor || g.kind == GateKind::Xnor ||
        g.kind == GateKind::Not) {
      out ^= 1U;
    }
    value[net] = out;
    return out;
  };
  for (const auto& g : netlist.gates) eval(g.output);
  return value;
}

std::vector<std::uint8_t> reference_outputs(const RawNetlist& netlist,
                                            const std::vector<std::uint8_t>& inputs,
                                            const std::map<std::string, std::uint8_t>& overrides) {
  const auto v = reference_eval(netlist, inputs, overrides);
  std::vector<std::uint8_t> out;
  for (const auto& o : netlist.ordered_outputs) out.push_back(v.at(o));
  return out;
}

std::vector<std::uint8_t> enumerate_vector(std::size_t width, std::uint64_t k) {
  std::vector<std::uint8_t> v(width);
  for (std::size_t i = 0; i < width; ++i) v[i] = (k >> i) & 1U;
  return v;
}

bool exhaustive_satisfiable(const RawNetlist& netlist,
                            const std::vector<std::pair<std::string, std::uint8_t>>& objectives) {
  const std::size_t w = netlist.ordered_inputs.size();
  if (w > 20) throw std::invalid_argument("too many inputs to enumerate");
  for (std::uint64_t k = 0; k < (1ULL << w); ++k) {
    const auto v = reference_eval(netlist, enumerate_vector(w, k));
    bool ok = true;
    for (const auto& [net, bit] : objectives) ok = ok && v.at(net) == bit;
    if (ok) return true;
  }
  return false;
}

bool exhaustive_activatable(const RawNetlist& netlist, const std::vector<std::string>& triggers,
                            const std::vector<std::uint8_t>& polarities, const std::string& target) {
  const std::size_t w = netlist.ordered_inputs.size();
  if (w > 20) throw std::invalid_argument("too many inputs to enumerate");
  for (std::uint64_t k = 0; k < (1ULL << w); ++k) {
    const auto vec = enumerate_vector(w, k);
    const auto v = reference_eval(netlist, vec);
    bool fire = true;
    for (std::size_t i = 0; i < triggers.size(); ++i) fire = fire && v.at(triggers[i]) == polarities[i];
    if (!fire) continue;
    std::vector<std::uint8_t> good;
    for (const auto& o : netlist.ordered_outputs) good.push_back(v.at(o));
    const auto bad = reference_outputs(netlist, vec, {{target, static_cast<std::uint8_t>(v.at(target) ^ 1U)}});
    if (good != bad) return true;
  }
  return false;
}

Circuit circuit_from_verilog(const std::string& text) {
  return Circuit(parse_netlist(text, NetlistFormat::StructuralVerilog));
}

std::filesystem::path benchmark(const std::string& name) {
  return std::filesystem::path(HTRL_SOURCE_DIR) / "benchmarks" / "iscas85" / (name + ".v");
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("htrl_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace htrl::test
