#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/rng.hpp"

namespace htrl {

/// Packed simulation result: one row of 64-vector words per net.
class ValueMatrix {
 public:
  ValueMatrix() = default;
  ValueMatrix(std::size_t nets, std::size_t vectors)
      : nets_(nets), vectors_(vectors), words_((vectors + 63) / 64), bits_(nets * words_, 0) {}

  [[nodiscard]] std::size_t net_count() const noexcept { return nets_; }
  [[nodiscard]] std::size_t vector_count() const noexcept { return vectors_; }
  [[nodiscard]] std::size_t words() const noexcept { return words_; }

  [[nodiscard]] bool get(NetId net, std::size_t vector) const {
    return (bits_[net * words_ + vector / 64] >> (vector % 64)) & 1U;
  }
  [[nodiscard]] std::span<const std::uint64_t> row(NetId net) const {
    return std::span<const std::uint64_t>(bits_).subspan(net * words_, words_);
  }
  std::span<std::uint64_t> row(NetId net) {
    return std::span<std::uint64_t>(bits_).subspan(net * words_, words_);
  }

  bool operator==(const ValueMatrix&) const = default;

 private:
  std::size_t nets_ = 0;
  std::size_t vectors_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// 64 lanes of one gate.
std::uint64_t eval_gate_word(GateKind kind, std::span<const std::uint64_t> inputs);

/// Evaluates every gate over `width` words per net. `values` is net-major
/// (net * width + w) with the primary-input rows already filled.
void simulate_words(const Circuit& circuit, std::span<std::uint64_t> values, std::size_t width);

/// Bit-parallel simulation of a vector list. Throws WidthMismatch.
ValueMatrix simulate(const Circuit& circuit, std::span<const TestVector> vectors);

/// Scalar reference: per-net values for one vector, gate by gate in
/// topological order. Throws WidthMismatch.
std::vector<std::uint8_t> simulate_scalar(const Circuit& circuit, const TestVector& vector);

/// Primary-output values of one vector, in declared output order.
std::vector<std::uint8_t> output_values(const Circuit& circuit, const TestVector& vector);

/// Seeded uniform random vectors. Vector j, input i is bit j%64 of
/// CounterRng(seed).word(i, j/64), so any block can be produced independently.
class RandomVectorSource {
 public:
  RandomVectorSource(std::size_t width, std::uint64_t seed) : width_(width), rng_(seed) {}

  /// Fills rows[i * count + k] with word `first_word + k` of input i.
  void fill_words(std::span<std::uint64_t> rows, std::size_t first_word, std::size_t count) const;
  [[nodiscard]] TestVector vector(std::size_t index) const;
  [[nodiscard]] std::size_t width() const noexcept { return width_; }

 private:
  std::size_t width_;
  CounterRng rng_;
};

struct SwitchingProfile {
  std::vector<std::uint64_t> ones_count;
  std::uint64_t total = 0;
  std::uint64_t seed = 0;
  std::vector<double> prob_one;
  std::vector<std::uint8_t> rare_value;
  std::vector<double> activity;

  [[nodiscard]] std::size_t net_count() const noexcept { return ones_count.size(); }
};

inline constexpr std::size_t kDefaultProfileVectors = 100000;

/// Per-net statistics over `n` random vectors from RandomVectorSource(seed).
SwitchingProfile switching_profile(const Circuit& circuit, std::size_t n = kDefaultProfileVectors,
                                   std::uint64_t seed = 0);

/// Value rows of selected nets over the same random corpus that
/// switching_profile(circuit, n, seed) uses; bits past n are cleared.
std::vector<std::vector<std::uint64_t>> random_value_rows(const Circuit& circuit,
                                                          std::span<const NetId> nets,
                                                          std::size_t n, std::uint64_t seed);

struct OutputMismatch {
  std::size_t vector_index;
  std::vector<std::uint32_t> outputs;  // positions in the declared output order
};

/// Vectors on which the suspect's outputs differ from the golden circuit's.
/// Throws InterfaceMismatch when port names or orders differ.
std::vector<OutputMismatch> compare_outputs(const Circuit& golden, const Circuit& suspect,
                                            std::span<const TestVector> vectors);

}  // namespace htrl
