#pragma once

// Toy environments with known optima for the trainer tests.

#include "htrl/environment.hpp"

namespace htrl::test {

/// One-step episodes; arm 0 pays 1, arm 1 pays 0.
class BanditEnv : public Environment {
 public:
  [[nodiscard]] std::size_t observation_width() const override { return 1; }
  [[nodiscard]] ActionSpec action_spec() const override { return ActionSpec::multi_discrete(1, 2); }

 protected:
  Observation do_reset(Rng&) override { return {1.0}; }
  StepResult do_step(const Action& a) override {
    return {{1.0}, a[0] == 0 ? 1.0 : 0.0, true, false};
  }
};

/// Two states visited in order, reward 1 per step whatever the action, then
/// terminal. V(first) = 1 + gamma, V(second) = 1.
class ChainEnv : public Environment {
 public:
  [[nodiscard]] std::size_t observation_width() const override { return 2; }
  [[nodiscard]] ActionSpec action_spec() const override { return ActionSpec::multi_discrete(1, 2); }

 protected:
  Observation do_reset(Rng&) override {
    at_ = 0;
    return {1.0, 0.0};
  }
  StepResult do_step(const Action&) override {
    ++at_;
    return {{0.0, 1.0}, 1.0, at_ == 2, false};
  }

 private:
  int at_ = 0;
};

/// Declares one observation width and returns another.
class BrokenEnv : public Environment {
 public:
  [[nodiscard]] std::size_t observation_width() const override { return 3; }
  [[nodiscard]] ActionSpec action_spec() const override { return ActionSpec::multi_discrete(1, 2); }

 protected:
  Observation do_reset(Rng&) override { return {0.0}; }
  StepResult do_step(const Action&) override { return {{0.0}, 0.0, true, false}; }
};

}  // namespace htrl::test
