#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "htrl/atpg.hpp"
#include "htrl/circuit.hpp"
#include "htrl/environment.hpp"
#include "htrl/netlist_io.hpp"
#include "htrl/ppo.hpp"
#include "htrl/testability.hpp"

namespace htrl {

enum class Move : int { NextLevel = 0, PrevLevel = 1, SameLevelUp = 2, SameLevelDown = 3, NoAction = 4 };

struct InsertionConfig {
  std::size_t trigger_count = 5;
  std::size_t episode_length = 450;
  PayloadMode payload_mode = PayloadMode::Random;
  double high_coverage = 0.8;  // share of rare nets that must sit below a P_high target
  std::uint64_t backtrack_limit = kDefaultBacktrackLimit;
};

/// Reward for a certified Trojan with `rare` rare triggers (-1 below one).
double insertion_reward(std::size_t rare);
inline constexpr double kInsertionFailReward = -1.0;

/// Level of the trigger AND root once spliced (inverters, then a balanced
/// 2-input tree), and the payload XOR level above it.
std::uint32_t payload_level(const Circuit& circuit, const TrojanInstance& trojan);

struct InsertionStepInfo {
  bool certified = false;
  std::size_t rare_triggers = 0;
  double reward = 0.0;
};

/// Trigger-moving environment. One Trojan per episode: the target is fixed at
/// reset and the agent moves the trigger nets through the levelized circuit.
class InsertionEnv : public Environment {
 public:
  InsertionEnv(const Circuit& circuit, RareNetSet rare, InsertionConfig cfg);
  InsertionEnv(const Circuit& circuit, ScoapTable scoap, RareNetSet rare, InsertionConfig cfg);

  [[nodiscard]] std::size_t observation_width() const override { return cfg_.trigger_count + 2; }
  [[nodiscard]] ActionSpec action_spec() const override {
    return ActionSpec::multi_discrete(cfg_.trigger_count, 5);
  }

  /// Nets that may serve as the target under the configured payload mode.
  [[nodiscard]] const std::vector<NetId>& eligible_targets() const noexcept { return eligible_; }
  /// Current Trojan; carries its activation vector after a certified step.
  [[nodiscard]] const TrojanInstance& trojan() const noexcept { return trojan_; }
  /// Levels of the triggers, the target and the payload XOR.
  [[nodiscard]] std::vector<std::uint32_t> state() const;
  [[nodiscard]] const InsertionStepInfo& last_step() const noexcept { return last_; }
  [[nodiscard]] const RareNetSet& rare_set() const noexcept { return rare_; }
  [[nodiscard]] const Circuit& circuit() const noexcept { return circuit_; }
  [[nodiscard]] std::size_t memo_size() const noexcept { return memo_.size(); }

  /// Replaces the current triggers (test hook; polarities follow SCOAP).
  void place(const std::vector<NetId>& triggers, NetId target);

 protected:
  Observation do_reset(Rng& rng) override;
  StepResult do_step(const Action& action) override;

 private:
  struct Certification {
    AtpgOutcome outcome;
    TestVector vector;
  };

  void refresh_polarities();
  void move(std::size_t trigger, Move m);
  [[nodiscard]] bool occupied(NetId net, std::size_t except) const;
  [[nodiscard]] Observation observe() const;
  const Certification& certify();

  const Circuit& circuit_;
  ScoapTable scoap_;
  RareNetSet rare_;
  InsertionConfig cfg_;
  PodemEngine podem_;
  std::vector<NetId> eligible_;
  std::vector<std::size_t> below_count_;  // nets strictly below each level
  Rng rng_{0};
  TrojanInstance trojan_;
  std::size_t steps_ = 0;
  InsertionStepInfo last_;
  std::map<std::vector<NetId>, Certification> memo_;
};

struct TrojanHarvest {
  std::vector<TrojanInstance> trojans;  // first-seen order
  std::map<std::uint32_t, std::size_t> by_rare_count;
  std::size_t rewarded_steps = 0;
  std::set<std::vector<NetId>> keys;
};

/// Canonical key for deduplication: sorted (trigger, polarity) pairs, then target.
std::vector<NetId> trojan_key(const TrojanInstance& trojan);

/// Runs the policy and keeps every distinct Trojan that earned a positive
/// reward with at least `min_rare` rare triggers.
TrojanHarvest harvest_trojans(const PolicyParams& params, InsertionEnv& env, std::size_t episodes,
                              std::uint64_t seed, std::size_t min_rare = 1,
                              PolicyMode mode = PolicyMode::Sample);

/// Adds the Trojan the environment holds after its last step, if rewarded.
void collect_trojan(const InsertionEnv& env, std::size_t min_rare, TrojanHarvest& harvest);

}  // namespace htrl
