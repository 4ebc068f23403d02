#pragma once

#include <cstdint>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/logic_sim.hpp"

namespace htrl {

/// Saturation value for unreachable controllability (constant nets) and
/// unobservable nets. Large enough to dominate any real sum, small enough to
/// stay exact in a double.
inline constexpr std::uint64_t kScoapInfinity = 1ULL << 53;

struct ScoapTable {
  std::vector<std::uint64_t> cc0;
  std::vector<std::uint64_t> cc1;
  std::vector<std::uint64_t> co;

  [[nodiscard]] std::size_t net_count() const noexcept { return cc0.size(); }
  [[nodiscard]] double hts(NetId net) const;
  [[nodiscard]] double ocr(NetId net) const;
  /// The harder-to-set value (larger CC); ties give 0.
  [[nodiscard]] std::uint8_t rare_value(NetId net) const { return cc1[net] > cc0[net] ? 1 : 0; }
  [[nodiscard]] std::uint64_t cc(NetId net, std::uint8_t value) const {
    return value ? cc1[net] : cc0[net];
  }
};

ScoapTable compute_scoap(const Circuit& circuit);

/// |cc1 - cc0| / max(cc0, cc1).
double hts(std::uint64_t cc0, std::uint64_t cc1);
/// co / (cc0 + cc1).
double ocr(std::uint64_t cc0, std::uint64_t cc1, std::uint64_t co);

struct StaticRareConfig {
  double t_hts = 0.0;
  double t_ocr = 0.0;
  double target_fraction = 0.05;
};

struct DynamicRareConfig {
  double theta = 0.01;
  std::size_t n_vectors = kDefaultProfileVectors;
  std::uint64_t seed = 0;
};

enum class RareSource { Static, Dynamic };

struct RareNet {
  NetId net;
  std::uint8_t rare_value;
  double score;  // HTS for static sets, activity for dynamic sets

  bool operator==(const RareNet&) const = default;
};

struct RareNetSet {
  std::vector<RareNet> members;  // ascending net ID
  RareSource source = RareSource::Static;

  [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
  [[nodiscard]] bool empty() const noexcept { return members.empty(); }
  [[nodiscard]] bool contains(NetId net) const;
  /// Rare value of a member net; nullopt for non-members.
  [[nodiscard]] std::optional<std::uint8_t> rare_value(NetId net) const;
};

/// Nets with HTS > t_hts and OCR < t_ocr.
RareNetSet extract_rare_static(const ScoapTable& table, const StaticRareConfig& cfg);

/// Nets with activity < theta. A theta above 0.5 selects every net.
RareNetSet extract_rare_dynamic(const SwitchingProfile& profile, const DynamicRareConfig& cfg);

struct Calibration {
  StaticRareConfig config;
  std::size_t selected = 0;
  double achieved_fraction = 0.0;
};

/// Joint (T_HTS, T_OCR) search for the rare fraction closest to the target.
/// Ties prefer the higher T_HTS.
Calibration calibrate_thresholds(const Circuit& circuit, double target_fraction = 0.05);
Calibration calibrate_thresholds(const ScoapTable& table, double target_fraction = 0.05);

}  // namespace htrl
