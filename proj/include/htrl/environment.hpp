#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "htrl/rng.hpp"

namespace htrl {

enum class ActionKind { MultiDiscrete, MultiBinary };

struct ActionSpec {
  ActionKind kind = ActionKind::MultiDiscrete;
  std::size_t heads = 1;
  std::size_t arity = 5;  // 2 for MultiBinary

  static ActionSpec multi_discrete(std::size_t heads, std::size_t arity = 5) {
    return {ActionKind::MultiDiscrete, heads, arity};
  }
  static ActionSpec multi_binary(std::size_t heads) { return {ActionKind::MultiBinary, heads, 2}; }

  bool operator==(const ActionSpec&) const = default;
};

using Observation = std::vector<double>;
using Action = std::vector<int>;

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;   // the episode ended inside the task
  bool truncated = false;  // the step budget ran out

  [[nodiscard]] bool done() const noexcept { return terminal || truncated; }
};

/// Episodic environment. The public reset/step wrappers enforce the contract
/// (no step after the episode ends, widths match the declared spec) so the
/// trainer never has to trust an implementation.
class Environment {
 public:
  virtual ~Environment() = default;

  Observation reset(Rng& rng);
  StepResult step(const Action& action);

  [[nodiscard]] virtual std::size_t observation_width() const = 0;
  [[nodiscard]] virtual ActionSpec action_spec() const = 0;
  [[nodiscard]] bool active() const noexcept { return active_; }

 protected:
  virtual Observation do_reset(Rng& rng) = 0;
  virtual StepResult do_step(const Action& action) = 0;

 private:
  void check_observation(const Observation& obs) const;

  bool active_ = false;
};

}  // namespace htrl
