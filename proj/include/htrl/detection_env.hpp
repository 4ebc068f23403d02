#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/environment.hpp"
#include "htrl/logic_sim.hpp"
#include "htrl/ppo.hpp"
#include "htrl/testability.hpp"

namespace htrl {

enum class Detector { Ssd, Sad, Cod };
std::string_view to_string(Detector d);
Detector parse_detector(std::string_view text);

/// Rare nets grouped under representatives. Activating a representative
/// activates every absorbed member on the profiling corpus.
struct PrunedBasis {
  std::vector<NetId> representatives;  // ascending net ID
  std::vector<std::uint8_t> rare_values;
  std::vector<double> activity;
  std::vector<std::vector<NetId>> absorbed;

  [[nodiscard]] std::size_t size() const noexcept { return representatives.size(); }
};

/// Groups rare nets: walking from the rarest, each unabsorbed net becomes a
/// representative and absorbs later nets that share a directed path with it
/// and hold their rare value on every corpus vector where it holds its own.
/// The corpus is regenerated from the profile's seed and size.
PrunedBasis prune_states(const Circuit& circuit, const RareNetSet& rare,
                         const SwitchingProfile& profile);

struct SsdConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

using DetectionState = std::vector<std::uint8_t>;

double reward_ssd(const DetectionState& prev, const DetectionState& cur, const SsdConfig& cfg);
/// Inverse-activity rewards; zero-activity nets get ten times the largest
/// nonzero-activity reward.
std::vector<double> sad_rewards(std::span<const double> switching);
double reward_sad(std::span<const double> switching, const DetectionState& state);
double reward_cod(std::span<const double> rewards, const DetectionState& state);

struct DetectionConfig {
  Detector detector = Detector::Ssd;
  std::size_t episode_length = 10;
  SsdConfig ssd;
};

/// Input-flipping environment over a pruned rare-net basis.
class DetectionEnv : public Environment {
 public:
  /// `reward_inputs` is the switching vector for SAD (defaults to the basis
  /// activities) and the rare-value controllabilities for COD.
  DetectionEnv(const Circuit& circuit, PrunedBasis basis, DetectionConfig cfg,
               std::vector<double> reward_inputs = {});

  [[nodiscard]] std::size_t observation_width() const override { return basis_.size(); }
  [[nodiscard]] ActionSpec action_spec() const override {
    return ActionSpec::multi_binary(circuit_.inputs().size());
  }

  [[nodiscard]] const TestVector& vector() const noexcept { return vector_; }
  [[nodiscard]] const DetectionState& state() const noexcept { return state_; }
  [[nodiscard]] const PrunedBasis& basis() const noexcept { return basis_; }
  [[nodiscard]] const Circuit& circuit() const noexcept { return circuit_; }
  /// Rare-value indicator of the basis for an arbitrary vector.
  [[nodiscard]] DetectionState state_of(const TestVector& vector) const;

 protected:
  Observation do_reset(Rng& rng) override;
  StepResult do_step(const Action& action) override;

 private:
  [[nodiscard]] Observation observe() const;

  const Circuit& circuit_;
  PrunedBasis basis_;
  DetectionConfig cfg_;
  std::vector<double> per_net_reward_;  // SAD or COD rewards per basis net
  TestVector vector_;
  DetectionState state_;
  std::size_t steps_ = 0;
};

/// Everything a detector needs: its rare set, the pruned basis and the
/// reward inputs. SSD/SAD use the dynamic set at `theta`; COD uses the static
/// set at `thresholds`.
struct DetectorSetup {
  RareNetSet rare;
  PrunedBasis basis;
  std::vector<double> reward_inputs;
};
DetectorSetup prepare_detector(const Circuit& circuit, Detector detector,
                               const SwitchingProfile& profile, const ScoapTable& scoap,
                               const StaticRareConfig& thresholds, double theta);

struct VectorHarvest {
  std::vector<TestVector> vectors;  // unique, first-seen order
  std::size_t raw = 0;              // qualifying steps before deduplication
};

/// 0.1 x the reward of the last finished training episode by default.
double harvest_cutoff(const TrainingCurve& curve, double fraction = 0.1);

/// Keeps the vector of every step whose reward exceeds `cutoff`; pass 0 to
/// keep every positive-reward vector.
VectorHarvest harvest_vectors(const PolicyParams& params, DetectionEnv& env, std::size_t episodes,
                              double cutoff, std::uint64_t seed,
                              PolicyMode mode = PolicyMode::Sample);

/// Set union in first-seen order.
std::vector<TestVector> combine_suites(std::span<const std::vector<TestVector>> suites);

}  // namespace htrl
