#include "htrl/testability.hpp"

#include <algorithm>
#include <cmath>

#include "htrl/error.hpp"

namespace htrl {

namespace {

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return std::min(a + b, kScoapInfinity);
}

}  // namespace

double hts(std::uint64_t cc0, std::uint64_t cc1) {
  const std::uint64_t hi = std::max(cc0, cc1);
  const std::uint64_t lo = std::min(cc0, cc1);
  if (hi == 0) return 0.0;
  return static_cast<double>(hi - lo) / static_cast<double>(hi);
}

double ocr(std::uint64_t cc0, std::uint64_t cc1, std::uint64_t co) {
  return static_cast<double>(co) / static_cast<double>(cc0 + cc1);
}

double ScoapTable::hts(NetId net) const { return htrl::hts(cc0.at(net), cc1.at(net)); }
double ScoapTable::ocr(NetId net) const { return htrl::ocr(cc0.at(net), cc1.at(net), co.at(net)); }

ScoapTable compute_scoap(const Circuit& circuit) {
  const std::size_t n = circuit.net_count();
  ScoapTable t;
  t.cc0.assign(n, 1);
  t.cc1.assign(n, 1);
  t.co.assign(n, kScoapInfinity);

  for (GateId g : circuit.topological_gates()) {
    const Gate& gate = circuit.gate(g);
    std::uint64_t c0 = 0;
    std::uint64_t c1 = 0;
    switch (gate.kind) {
      case GateKind::And:
      case GateKind::Nand: {
        c0 = kScoapInfinity;
        for (NetId in : gate.inputs) {
          c1 = sat_add(c1, t.cc1[in]);
          c0 = std::min(c0, t.cc0[in]);
        }
        break;
      }
      case GateKind::Or:
      case GateKind::Nor: {
        c1 = kScoapInfinity;
        for (NetId in : gate.inputs) {
          c0 = sat_add(c0, t.cc0[in]);
          c1 = std::min(c1, t.cc1[in]);
        }
        break;
      }
      case GateKind::Xor:
      case GateKind::Xnor: {
        c0 = t.cc0[gate.inputs[0]];
        c1 = t.cc1[gate.inputs[0]];
        for (std::size_t k = 1; k < gate.inputs.size(); ++k) {
          const NetId in = gate.inputs[k];
          const std::uint64_t n0 = std::min(sat_add(c0, t.cc0[in]), sat_add(c1, t.cc1[in]));
          const std::uint64_t n1 = std::min(sat_add(c0, t.cc1[in]), sat_add(c1, t.cc0[in]));
          c0 = n0;
          c1 = n1;
        }
        break;
      }
      case GateKind::Not:
      case GateKind::Buf:
        c0 = t.cc0[gate.inputs[0]];
        c1 = t.cc1[gate.inputs[0]];
        break;
      case GateKind::Const0:
        c0 = 0;
        c1 = kScoapInfinity;
        break;
      case GateKind::Const1:
        c0 = kScoapInfinity;
        c1 = 0;
        break;
    }
    if (is_inverting(gate.kind)) std::swap(c0, c1);
    t.cc0[gate.output] = sat_add(c0, 1);
    t.cc1[gate.output] = sat_add(c1, 1);
  }

  for (NetId po : circuit.outputs()) t.co[po] = 0;
  const auto topo = circuit.topological_gates();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const Gate& gate = circuit.gate(*it);
    const std::uint64_t out_co = t.co[gate.output];
    if (out_co >= kScoapInfinity) continue;
    const auto& ins = gate.inputs;
    for (std::size_t pin = 0; pin < ins.size(); ++pin) {
      std::uint64_t cost = out_co;
      for (std::size_t other = 0; other < ins.size(); ++other) {
        if (other == pin) continue;
        const NetId b = ins[other];
        switch (gate.kind) {
          case GateKind::And:
          case GateKind::Nand: cost = sat_add(cost, t.cc1[b]); break;
          case GateKind::Or:
          case GateKind::Nor: cost = sat_add(cost, t.cc0[b]); break;
          default: cost = sat_add(cost, std::min(t.cc0[b], t.cc1[b])); break;
        }
      }
      cost = sat_add(cost, 1);
      // Stem observability is the easiest branch.
      t.co[ins[pin]] = std::min(t.co[ins[pin]], cost);
    }
  }
  return t;
}

bool RareNetSet::contains(NetId net) const { return rare_value(net).has_value(); }

std::optional<std::uint8_t> RareNetSet::rare_value(NetId net) const {
  const auto it = std::lower_bound(members.begin(), members.end(), net,
                                   [](const RareNet& m, NetId id) { return m.net < id; });
  if (it == members.end() || it->net != net) return std::nullopt;
  return it->rare_value;
}

RareNetSet extract_rare_static(const ScoapTable& table, const StaticRareConfig& cfg) {
  RareNetSet set;
  set.source = RareSource::Static;
  for (NetId net = 0; net < table.net_count(); ++net) {
    const double h = table.hts(net);
    if (h > cfg.t_hts && table.ocr(net) < cfg.t_ocr) {
      set.members.push_back({net, table.rare_value(net), h});
    }
  }
  return set;
}

RareNetSet extract_rare_dynamic(const SwitchingProfile& profile, const DynamicRareConfig& cfg) {
  if (!(cfg.theta >= 0.0)) throw Error(ErrorKind::DomainError, "theta must be non-negative");
  RareNetSet set;
  set.source = RareSource::Dynamic;
  for (NetId net = 0; net < profile.net_count(); ++net) {
    if (profile.activity[net] < cfg.theta) {
      set.members.push_back({net, profile.rare_value[net], profile.activity[net]});
    }
  }
  return set;
}

Calibration calibrate_thresholds(const Circuit& circuit, double target_fraction) {
  return calibrate_thresholds(compute_scoap(circuit), target_fraction);
}

Calibration calibrate_thresholds(const ScoapTable& table, double target_fraction) {
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw Error(ErrorKind::DomainError, "target fraction must lie in (0, 1]");
  }
  const std::size_t n = table.net_count();
  std::vector<double> h(n);
  std::vector<double> o(n);
  for (NetId net = 0; net < n; ++net) {
    h[net] = table.hts(net);
    o[net] = table.ocr(net);
  }
  std::vector<double> candidates(h.begin(), h.end());
  candidates.push_back(0.0);
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double want = target_fraction * static_cast<double>(n);
  Calibration best;
  double best_err = INFINITY;
  std::vector<double> eligible;
  for (double t_hts : candidates) {
    eligible.clear();
    for (NetId net = 0; net < n; ++net) {
      if (h[net] > t_hts) eligible.push_back(o[net]);
    }
    std::sort(eligible.begin(), eligible.end());
    // Achievable counts are the breakpoints between distinct OCR values.
    std::size_t count = 0;
    double err = want;
    for (std::size_t c = 1; c <= eligible.size(); ++c) {
      if (c < eligible.size() && eligible[c] == eligible[c - 1]) continue;
      const double e = std::abs(static_cast<double>(c) - want);
      if (e < err) {
        err = e;
        count = c;
      }
    }
    // Candidates run from high to low T_HTS, so strict improvement keeps the
    // higher threshold on ties.
    if (err < best_err) {
      best_err = err;
      double t_ocr = 0.0;
      if (count == eligible.size() && count > 0) {
        t_ocr = eligible.back() + 1.0;
        if (t_ocr <= eligible.back()) t_ocr = std::nextafter(eligible.back(), INFINITY);
      } else if (count > 0) {
        t_ocr = eligible[count - 1] + (eligible[count] - eligible[count - 1]) / 2.0;
        if (t_ocr <= eligible[count - 1]) t_ocr = eligible[count];
      }
      best.config = StaticRareConfig{t_hts, t_ocr, target_fraction};
      best.selected = count;
    }
  }
  best.achieved_fraction = n == 0 ? 0.0 : static_cast<double>(best.selected) / static_cast<double>(n);
  return best;
}

}  // namespace htrl
