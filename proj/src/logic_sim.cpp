#include "htrl/logic_sim.hpp"

#include <algorithm>
#include <bit>

#include "htrl/error.hpp"
#include "htrl/parallel.hpp"

namespace htrl {

std::uint64_t eval_gate_word(GateKind kind, std::span<const std::uint64_t> in) {
  std::uint64_t acc = 0;
  switch (kind) {
    case GateKind::And:
    case GateKind::Nand:
      acc = ~0ULL;
      for (auto v : in) acc &= v;
      break;
    case GateKind::Or:
    case GateKind::Nor:
      for (auto v : in) acc |= v;
      break;
    case GateKind::Xor:
    case GateKind::Xnor:
      for (auto v : in) acc ^= v;
      break;
    case GateKind::Not:
    case GateKind::Buf:
      acc = in[0];
      break;
    case GateKind::Const0: return 0;
    case GateKind::Const1: return ~0ULL;
  }
  return is_inverting(kind) ? ~acc : acc;
}

void simulate_words(const Circuit& circuit, std::span<std::uint64_t> values, std::size_t width) {
  for (GateId g : circuit.topological_gates()) {
    const Gate& gate = circuit.gate(g);
    std::uint64_t* out = values.data() + static_cast<std::size_t>(gate.output) * width;
    const auto& ins = gate.inputs;
    const bool invert = is_inverting(gate.kind);
    switch (gate.kind) {
      case GateKind::Const0:
      case GateKind::Const1:
        std::fill(out, out + width, gate.kind == GateKind::Const1 ? ~0ULL : 0ULL);
        continue;
      default:
        break;
    }
    std::copy_n(values.data() + static_cast<std::size_t>(ins[0]) * width, width, out);
    for (std::size_t k = 1; k < ins.size(); ++k) {
      const std::uint64_t* src = values.data() + static_cast<std::size_t>(ins[k]) * width;
      switch (gate.kind) {
        case GateKind::And:
        case GateKind::Nand:
          for (std::size_t w = 0; w < width; ++w) out[w] &= src[w];
          break;
        case GateKind::Or:
        case GateKind::Nor:
          for (std::size_t w = 0; w < width; ++w) out[w] |= src[w];
          break;
        default:
          for (std::size_t w = 0; w < width; ++w) out[w] ^= src[w];
          break;
      }
    }
    if (invert) {
      for (std::size_t w = 0; w < width; ++w) out[w] = ~out[w];
    }
  }
}

namespace {

void check_width(const Circuit& circuit, std::size_t width) {
  if (width != circuit.inputs().size()) {
    throw Error(ErrorKind::WidthMismatch, "vector has " + std::to_string(width) +
                                              " bits, circuit has " +
                                              std::to_string(circuit.inputs().size()) + " inputs");
  }
}

}  // namespace

ValueMatrix simulate(const Circuit& circuit, std::span<const TestVector> vectors) {
  for (const auto& v : vectors) check_width(circuit, v.size());
  ValueMatrix m(circuit.net_count(), vectors.size());
  const std::size_t width = m.words();
  if (width == 0) return m;
  std::vector<std::uint64_t> values(circuit.net_count() * width, 0);
  const auto pis = circuit.inputs();
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    for (std::size_t i = 0; i < pis.size(); ++i) {
      if (vectors[j][i]) values[pis[i] * width + j / 64] |= 1ULL << (j % 64);
    }
  }
  simulate_words(circuit, values, width);
  // Clear the lanes past the last vector so rows compare cleanly.
  const std::uint64_t tail =
      vectors.size() % 64 == 0 ? ~0ULL : (1ULL << (vectors.size() % 64)) - 1;
  for (NetId n = 0; n < circuit.net_count(); ++n) {
    auto row = m.row(n);
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(n * width), width, row.begin());
    row[width - 1] &= tail;
  }
  return m;
}

std::vector<std::uint8_t> simulate_scalar(const Circuit& circuit, const TestVector& vector) {
  check_width(circuit, vector.size());
  std::vector<std::uint8_t> value(circuit.net_count(), 0);
  const auto pis = circuit.inputs();
  for (std::size_t i = 0; i < pis.size(); ++i) value[pis[i]] = vector[i] ? 1 : 0;
  for (GateId g : circuit.topological_gates()) {
    const Gate& gate = circuit.gate(g);
    std::uint8_t v = 0;
    switch (gate.kind) {
      case GateKind::And:
      case GateKind::Nand:
        v = 1;
        for (NetId in : gate.inputs) v = static_cast<std::uint8_t>(v & value[in]);
        break;
      case GateKind::Or:
      case GateKind::Nor:
        for (NetId in : gate.inputs) v = static_cast<std::uint8_t>(v | value[in]);
        break;
      case GateKind::Xor:
      case GateKind::Xnor:
        for (NetId in : gate.inputs) v = static_cast<std::uint8_t>(v ^ value[in]);
        break;
      case GateKind::Not:
      case GateKind::Buf:
        v = value[gate.inputs[0]];
        break;
      case GateKind::Const0: v = 0; break;
      case GateKind::Const1: v = 1; break;
    }
    value[gate.output] = is_inverting(gate.kind) ? static_cast<std::uint8_t>(v ^ 1U) : v;
  }
  return value;
}

std::vector<std::uint8_t> output_values(const Circuit& circuit, const TestVector& vector) {
  const auto all = simulate_scalar(circuit, vector);
  std::vector<std::uint8_t> out;
  out.reserve(circuit.outputs().size());
  for (NetId po : circuit.outputs()) out.push_back(all[po]);
  return out;
}

void RandomVectorSource::fill_words(std::span<std::uint64_t> rows, std::size_t first_word,
                                    std::size_t count) const {
  for (std::size_t i = 0; i < width_; ++i) {
    for (std::size_t k = 0; k < count; ++k) rows[i * count + k] = rng_.word(i, first_word + k);
  }
}

TestVector RandomVectorSource::vector(std::size_t index) const {
  TestVector v(width_);
  for (std::size_t i = 0; i < width_; ++i) {
    v[i] = static_cast<std::uint8_t>((rng_.word(i, index / 64) >> (index % 64)) & 1U);
  }
  return v;
}

SwitchingProfile switching_profile(const Circuit& circuit, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::DomainError, "switching profile needs at least one vector");
  constexpr std::size_t kBlockWords = 32;
  const std::size_t total_words = (n + 63) / 64;
  const std::size_t blocks = (total_words + kBlockWords - 1) / kBlockWords;
  const std::size_t nets = circuit.net_count();
  const RandomVectorSource source(circuit.inputs().size(), seed);

  std::vector<std::vector<std::uint64_t>> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t first = b * kBlockWords;
    const std::size_t width = std::min(kBlockWords, total_words - first);
    std::vector<std::uint64_t> values(nets * width, 0);
    std::vector<std::uint64_t> pi_rows(circuit.inputs().size() * width);
    source.fill_words(pi_rows, first, width);
    const auto pis = circuit.inputs();
    for (std::size_t i = 0; i < pis.size(); ++i) {
      std::copy_n(pi_rows.begin() + static_cast<std::ptrdiff_t>(i * width), width,
                  values.begin() + static_cast<std::ptrdiff_t>(pis[i] * width));
    }
    simulate_words(circuit, values, width);
    std::uint64_t tail = ~0ULL;
    if (first + width == total_words && n % 64 != 0) tail = (1ULL << (n % 64)) - 1;
    auto& counts = partial[b];
    counts.assign(nets, 0);
    for (NetId net = 0; net < nets; ++net) {
      const std::uint64_t* row = values.data() + net * width;
      std::uint64_t c = 0;
      for (std::size_t w = 0; w + 1 < width; ++w) c += std::popcount(row[w]);
      c += std::popcount(row[width - 1] & tail);
      counts[net] = c;
    }
  });

  SwitchingProfile p;
  p.total = n;
  p.seed = seed;
  p.ones_count.assign(nets, 0);
  for (const auto& counts : partial) {
    for (std::size_t k = 0; k < nets; ++k) p.ones_count[k] += counts[k];
  }
  p.prob_one.resize(nets);
  p.rare_value.resize(nets);
  p.activity.resize(nets);
  for (std::size_t k = 0; k < nets; ++k) {
    const double prob = static_cast<double>(p.ones_count[k]) / static_cast<double>(n);
    p.prob_one[k] = prob;
    p.rare_value[k] = prob < 0.5 ? 1 : 0;
    p.activity[k] = std::min(prob, 1.0 - prob);
  }
  return p;
}

std::vector<std::vector<std::uint64_t>> random_value_rows(const Circuit& circuit,
                                                          std::span<const NetId> nets,
                                                          std::size_t n, std::uint64_t seed) {
  constexpr std::size_t kBlockWords = 32;
  const std::size_t total_words = (n + 63) / 64;
  std::vector<std::vector<std::uint64_t>> rows(nets.size(), std::vector<std::uint64_t>(total_words));
  const RandomVectorSource source(circuit.inputs().size(), seed);
  const auto pis = circuit.inputs();
  std::vector<std::uint64_t> values;
  std::vector<std::uint64_t> pi_rows;
  for (std::size_t first = 0; first < total_words; first += kBlockWords) {
    const std::size_t width = std::min(kBlockWords, total_words - first);
    values.assign(circuit.net_count() * width, 0);
    pi_rows.resize(pis.size() * width);
    source.fill_words(pi_rows, first, width);
    for (std::size_t i = 0; i < pis.size(); ++i) {
      std::copy_n(pi_rows.begin() + static_cast<std::ptrdiff_t>(i * width), width,
                  values.begin() + static_cast<std::ptrdiff_t>(pis[i] * width));
    }
    simulate_words(circuit, values, width);
    for (std::size_t k = 0; k < nets.size(); ++k) {
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(nets[k] * width), width,
                  rows[k].begin() + static_cast<std::ptrdiff_t>(first));
    }
  }
  if (n % 64 != 0) {
    for (auto& row : rows) row.back() &= (1ULL << (n % 64)) - 1;
  }
  return rows;
}

std::vector<OutputMismatch> compare_outputs(const Circuit& golden, const Circuit& suspect,
                                            std::span<const TestVector> vectors) {
  auto same_ports = [&](std::span<const NetId> a, std::span<const NetId> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (golden.net_name(a[i]) != suspect.net_name(b[i])) return false;
    }
    return true;
  };
  if (!same_ports(golden.inputs(), suspect.inputs()) ||
      !same_ports(golden.outputs(), suspect.outputs())) {
    throw Error(ErrorKind::InterfaceMismatch, "golden and suspect ports differ");
  }
  const ValueMatrix g = simulate(golden, vectors);
  const ValueMatrix s = simulate(suspect, vectors);
  const auto gpo = golden.outputs();
  const auto spo = suspect.outputs();
  std::vector<std::vector<std::uint32_t>> per_vector(vectors.size());
  for (std::uint32_t k = 0; k < gpo.size(); ++k) {
    const auto a = g.row(gpo[k]);
    const auto b = s.row(spo[k]);
    for (std::size_t w = 0; w < g.words(); ++w) {
      std::uint64_t d = a[w] ^ b[w];
      while (d != 0) {
        const int bit = std::countr_zero(d);
        per_vector[w * 64 + static_cast<std::size_t>(bit)].push_back(k);
        d &= d - 1;
      }
    }
  }
  std::vector<OutputMismatch> report;
  for (std::size_t j = 0; j < per_vector.size(); ++j) {
    if (!per_vector[j].empty()) report.push_back({j, std::move(per_vector[j])});
  }
  return report;
}

}  // namespace htrl
