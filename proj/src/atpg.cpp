#include "htrl/atpg.hpp"

#include <algorithm>
#include <stdexcept>

#include "htrl/logic_sim.hpp"

namespace htrl {

namespace {

constexpr std::uint8_t kX = 2;

std::uint8_t not3(std::uint8_t v) { return v == kX ? kX : static_cast<std::uint8_t>(v ^ 1U); }

template <typename Get>
std::uint8_t eval3(GateKind kind, std::span<const NetId> inputs, Get value) {
  std::uint8_t out = 0;
  switch (kind) {
    case GateKind::And:
    case GateKind::Nand: {
      out = 1;
      for (NetId in : inputs) {
        const std::uint8_t v = value(in);
        if (v == 0) {
          out = 0;
          break;
        }
        if (v == kX) out = kX;
      }
      break;
    }
    case GateKind::Or:
    case GateKind::Nor: {
      out = 0;
      for (NetId in : inputs) {
        const std::uint8_t v = value(in);
        if (v == 1) {
          out = 1;
          break;
        }
        if (v == kX) out = kX;
      }
      break;
    }
    case GateKind::Xor:
    case GateKind::Xnor: {
      out = 0;
      for (NetId in : inputs) {
        const std::uint8_t v = value(in);
        if (v == kX) {
          out = kX;
          break;
        }
        out = static_cast<std::uint8_t>(out ^ v);
      }
      break;
    }
    case GateKind::Not:
    case GateKind::Buf: out = value(inputs[0]); break;
    case GateKind::Const0: return 0;
    case GateKind::Const1: return 1;
  }
  return is_inverting(kind) ? not3(out) : out;
}

}  // namespace

PodemEngine::PodemEngine(const Circuit& circuit) : PodemEngine(circuit, compute_scoap(circuit)) {}

PodemEngine::PodemEngine(const Circuit& circuit, ScoapTable scoap)
    : circuit_(circuit), scoap_(std::move(scoap)) {
  good_.assign(circuit.net_count(), kX);
  bad_.assign(circuit.net_count(), kX);
  buckets_.resize(circuit.max_level() + 1);
  queued_.assign(circuit.gate_count(), 0);
  visit_stamp_.assign(circuit.net_count(), 0);
}

bool PodemEngine::composite_x(NetId net) const { return good_[net] == kX || bad_[net] == kX; }

bool PodemEngine::carries_d(NetId net) const {
  return good_[net] != kX && bad_[net] != kX && good_[net] != bad_[net];
}

void PodemEngine::evaluate_gate(GateId g, std::uint8_t& good, std::uint8_t& bad) const {
  const Gate& gate = circuit_.gate(g);
  good = eval3(gate.kind, gate.inputs, [&](NetId n) { return good_[n]; });
  if (has_fault_ && gate.output == fault_net_) {
    bad = not3(good);
  } else {
    bad = eval3(gate.kind, gate.inputs, [&](NetId n) { return bad_[n]; });
  }
}

void PodemEngine::reset_values() {
  std::fill(good_.begin(), good_.end(), kX);
  std::fill(bad_.begin(), bad_.end(), kX);
  for (GateId g : circuit_.topological_gates()) {
    const NetId out = circuit_.gate(g).output;
    evaluate_gate(g, good_[out], bad_[out]);
  }
}

void PodemEngine::assign(NetId pi, std::uint8_t value) {
  good_[pi] = value;
  bad_[pi] = value;
  for (const FanoutPin& f : circuit_.fanouts(pi)) {
    if (!queued_[f.gate]) {
      queued_[f.gate] = 1;
      buckets_[circuit_.level(circuit_.gate(f.gate).output)].push_back(f.gate);
    }
  }
}

void PodemEngine::propagate() {
  for (std::size_t lvl = 1; lvl < buckets_.size(); ++lvl) {
    auto& bucket = buckets_[lvl];
    // Gates only schedule readers at higher levels, so the bucket is stable.
    for (std::size_t k = 0; k < bucket.size(); ++k) {
      const GateId g = bucket[k];
      queued_[g] = 0;
      const NetId out = circuit_.gate(g).output;
      std::uint8_t good = 0;
      std::uint8_t bad = 0;
      evaluate_gate(g, good, bad);
      if (good == good_[out] && bad == bad_[out]) continue;
      good_[out] = good;
      bad_[out] = bad;
      for (const FanoutPin& f : circuit_.fanouts(out)) {
        if (!queued_[f.gate]) {
          queued_[f.gate] = 1;
          buckets_[circuit_.level(circuit_.gate(f.gate).output)].push_back(f.gate);
        }
      }
    }
    bucket.clear();
  }
}

bool PodemEngine::x_path_from_target() {
  // A net whose good and faulty values are both fixed and equal can never
  // carry the difference; every route to an output must avoid such nets.
  ++stamp_;
  std::vector<NetId> stack{fault_net_};
  visit_stamp_[fault_net_] = stamp_;
  while (!stack.empty()) {
    const NetId net = stack.back();
    stack.pop_back();
    if (circuit_.is_output(net)) return true;
    for (const FanoutPin& f : circuit_.fanouts(net)) {
      const NetId out = circuit_.gate(f.gate).output;
      if (visit_stamp_[out] == stamp_) continue;
      if (!composite_x(out) && good_[out] == bad_[out]) continue;
      visit_stamp_[out] = stamp_;
      stack.push_back(out);
    }
  }
  return false;
}

PodemEngine::Status PodemEngine::check() {
  bool satisfied = true;
  for (const auto& obj : objectives_) {
    const std::uint8_t v = good_[obj.net];
    if (v == kX) {
      satisfied = false;
    } else if (v != obj.value) {
      return Status::Conflict;
    }
  }
  if (!has_fault_) return satisfied ? Status::Success : Status::Continue;
  if (satisfied) {
    for (NetId po : cone_outputs_) {
      if (carries_d(po)) return Status::Success;
    }
  }
  if (!x_path_from_target()) return Status::Conflict;
  return Status::Continue;
}

AtpgObjective PodemEngine::next_objective() const {
  // Unjustified objectives first, hardest first.
  const AtpgObjective* pick = nullptr;
  std::uint64_t pick_cost = 0;
  for (const auto& obj : objectives_) {
    if (good_[obj.net] != kX) continue;
    const std::uint64_t cost = scoap_.cc(obj.net, obj.value);
    if (pick == nullptr || cost > pick_cost) {
      pick = &obj;
      pick_cost = cost;
    }
  }
  if (pick != nullptr) return *pick;

  if (good_[fault_net_] == kX) {
    const std::uint8_t easy = scoap_.cc1[fault_net_] < scoap_.cc0[fault_net_] ? 1 : 0;
    return {fault_net_, easy};
  }

  // Propagation: the D-frontier gate closest to an output.
  GateId best = kNoGate;
  std::uint64_t best_co = 0;
  for (GateId g : cone_gates_) {
    const Gate& gate = circuit_.gate(g);
    if (!composite_x(gate.output)) continue;
    const bool has_d = std::any_of(gate.inputs.begin(), gate.inputs.end(),
                                   [&](NetId in) { return carries_d(in); });
    if (!has_d) continue;
    const std::uint64_t co = scoap_.co[gate.output];
    if (best == kNoGate || co < best_co) {
      best = g;
      best_co = co;
    }
  }
  if (best == kNoGate) return {fault_net_, good_[fault_net_]};
  const Gate& gate = circuit_.gate(best);
  std::uint8_t noncontrolling = 0;
  if (gate.kind == GateKind::And || gate.kind == GateKind::Nand) noncontrolling = 1;
  NetId chosen = gate.inputs.front();
  bool found = false;
  for (NetId in : gate.inputs) {
    if (good_[in] == kX) {
      chosen = in;
      found = true;
      break;
    }
  }
  if (!found) {
    for (NetId in : gate.inputs) {
      if (composite_x(in)) {
        chosen = in;
        break;
      }
    }
  }
  return {chosen, noncontrolling};
}

std::pair<NetId, std::uint8_t> PodemEngine::backtrace(AtpgObjective objective) const {
  NetId net = objective.net;
  std::uint8_t value = objective.value;
  while (!circuit_.is_input(net)) {
    const Gate& gate = circuit_.gate(circuit_.driver(net));
    if (is_inverting(gate.kind)) value ^= 1U;
    NetId next = kNoGate;
    switch (gate.kind) {
      case GateKind::And:
      case GateKind::Nand:
      case GateKind::Or:
      case GateKind::Nor: {
        const bool and_like = gate.kind == GateKind::And || gate.kind == GateKind::Nand;
        // Inner value equal to the controlling value needs one input: take the
        // easiest. Otherwise every input must be set: take the hardest.
        const std::uint8_t controlling = and_like ? 0 : 1;
        const bool need_all = value != controlling;
        std::uint64_t best = 0;
        for (NetId in : gate.inputs) {
          if (!composite_x(in)) continue;
          const std::uint64_t cost = scoap_.cc(in, value);
          if (next == kNoGate || (need_all ? cost > best : cost < best)) {
            next = in;
            best = cost;
          }
        }
        break;
      }
      case GateKind::Xor:
      case GateKind::Xnor: {
        std::uint8_t parity = 0;
        std::uint64_t best = 0;
        for (NetId in : gate.inputs) {
          if (composite_x(in)) {
            const std::uint64_t cost = std::min(scoap_.cc0[in], scoap_.cc1[in]);
            if (next == kNoGate || cost < best) {
              next = in;
              best = cost;
            }
          }
        }
        for (NetId in : gate.inputs) {
          if (in != next && good_[in] == 1) parity ^= 1U;
        }
        value ^= parity;
        break;
      }
      case GateKind::Not:
      case GateKind::Buf: next = gate.inputs[0]; break;
      case GateKind::Const0:
      case GateKind::Const1: break;
    }
    if (next == kNoGate) break;
    net = next;
  }
  return {net, value};
}

AtpgResult PodemEngine::search(std::uint64_t limit) {
  reset_values();
  AtpgResult result;
  std::vector<Decision> stack;
  for (;;) {
    Status status = check();
    if (status == Status::Continue) {
      const auto [pi, value] = backtrace(next_objective());
      if (circuit_.is_input(pi) && good_[pi] == kX) {
        stack.push_back({pi, value, false});
        assign(pi, value);
        propagate();
        continue;
      }
      // No free input under the objective: treat the branch as dead.
      status = Status::Conflict;
    }
    if (status == Status::Success) {
      result.outcome = AtpgOutcome::Vector;
      result.vector.assign(circuit_.inputs().size(), 0);
      for (std::size_t i = 0; i < circuit_.inputs().size(); ++i) {
        const std::uint8_t v = good_[circuit_.inputs()[i]];
        result.vector[i] = v == kX ? 0 : v;
      }
      return result;
    }
    while (!stack.empty() && stack.back().flipped) {
      assign(stack.back().pi, kX);
      stack.pop_back();
    }
    if (stack.empty()) {
      propagate();
      result.outcome = AtpgOutcome::Untestable;
      return result;
    }
    if (result.backtracks >= limit) {
      for (const auto& d : stack) assign(d.pi, kX);
      propagate();
      result.outcome = AtpgOutcome::Aborted;
      return result;
    }
    ++result.backtracks;
    auto& top = stack.back();
    top.value ^= 1U;
    top.flipped = true;
    assign(top.pi, top.value);
    propagate();
  }
}

AtpgResult PodemEngine::justify(std::span<const AtpgObjective> objectives, std::uint64_t limit) {
  objectives_.assign(objectives.begin(), objectives.end());
  has_fault_ = false;
  cone_gates_.clear();
  cone_outputs_.clear();
  AtpgResult r = search(limit);
  if (r.outcome == AtpgOutcome::Vector) {
    const auto values = simulate_scalar(circuit_, r.vector);
    for (const auto& obj : objectives_) {
      if (values[obj.net] != obj.value) {
        throw std::logic_error("justify produced a vector that misses an objective");
      }
    }
  }
  return r;
}

AtpgResult PodemEngine::activate(const TrojanInstance& trojan, std::uint64_t limit) {
  check_trojan_rules(circuit_, trojan);
  objectives_.clear();
  for (std::size_t i = 0; i < trojan.trigger_nets.size(); ++i) {
    objectives_.push_back({trojan.trigger_nets[i], trojan.polarities[i]});
  }
  has_fault_ = true;
  fault_net_ = trojan.target_net;

  // Gates in the transitive fanout of the target, in level order.
  cone_gates_.clear();
  cone_outputs_.clear();
  ++stamp_;
  std::vector<NetId> frontier{fault_net_};
  visit_stamp_[fault_net_] = stamp_;
  for (std::size_t k = 0; k < frontier.size(); ++k) {
    const NetId net = frontier[k];
    if (circuit_.is_output(net)) cone_outputs_.push_back(net);
    for (const FanoutPin& f : circuit_.fanouts(net)) {
      const NetId out = circuit_.gate(f.gate).output;
      if (visit_stamp_[out] == stamp_) continue;
      visit_stamp_[out] = stamp_;
      cone_gates_.push_back(f.gate);
      frontier.push_back(out);
    }
  }
  std::sort(cone_gates_.begin(), cone_gates_.end(), [&](GateId a, GateId b) {
    const auto la = circuit_.level(circuit_.gate(a).output);
    const auto lb = circuit_.level(circuit_.gate(b).output);
    return la != lb ? la < lb : a < b;
  });

  AtpgResult r = search(limit);
  has_fault_ = false;
  if (r.outcome == AtpgOutcome::Vector && !activates(circuit_, trojan, r.vector)) {
    throw std::logic_error("activation vector failed dual-simulation verification");
  }
  return r;
}

AtpgResult justify(const Circuit& circuit, std::span<const AtpgObjective> objectives,
                   std::uint64_t limit) {
  PodemEngine engine(circuit);
  return engine.justify(objectives, limit);
}

AtpgResult activation_vector(const Circuit& golden, const TrojanInstance& trojan,
                             std::uint64_t limit) {
  PodemEngine engine(golden);
  return engine.activate(trojan, limit);
}

bool activates(const Circuit& golden, const TrojanInstance& trojan, const TestVector& vector) {
  const SplicedCircuit spliced = splice_trojan(golden, trojan);
  return output_values(golden, vector) != output_values(spliced.circuit, vector);
}

}  // namespace htrl
