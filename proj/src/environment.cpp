#include "htrl/environment.hpp"

#include <cmath>

#include "htrl/error.hpp"

namespace htrl {

void Environment::check_observation(const Observation& obs) const {
  if (obs.size() != observation_width()) {
    throw Error(ErrorKind::EnvContractViolation,
                "observation has width " + std::to_string(obs.size()) + ", declared " +
                    std::to_string(observation_width()));
  }
}

Observation Environment::reset(Rng& rng) {
  Observation obs = do_reset(rng);
  check_observation(obs);
  active_ = true;
  return obs;
}

StepResult Environment::step(const Action& action) {
  if (!active_) {
    throw Error(ErrorKind::EnvContractViolation, "step called on an episode that has ended");
  }
  const ActionSpec spec = action_spec();
  if (action.size() != spec.heads) {
    throw Error(ErrorKind::EnvContractViolation,
                "action has " + std::to_string(action.size()) + " heads, declared " +
                    std::to_string(spec.heads));
  }
  for (int a : action) {
    if (a < 0 || static_cast<std::size_t>(a) >= spec.arity) {
      throw Error(ErrorKind::EnvContractViolation, "action component out of range");
    }
  }
  StepResult r = do_step(action);
  check_observation(r.observation);
  if (!std::isfinite(r.reward)) throw Error(ErrorKind::EnvContractViolation, "non-finite reward");
  if (r.done()) active_ = false;
  return r;
}

}  // namespace htrl
