#include "htrl/detection_env.hpp"

#include <algorithm>
#include <numeric>

#include "htrl/error.hpp"

namespace htrl {

std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::Ssd: return "ssd";
    case Detector::Sad: return "sad";
    case Detector::Cod: return "cod";
  }
  return "?";
}

Detector parse_detector(std::string_view text) {
  if (text == "ssd") return Detector::Ssd;
  if (text == "sad") return Detector::Sad;
  if (text == "cod") return Detector::Cod;
  throw Error(ErrorKind::Usage, "detector must be one of ssd, sad, cod");
}

namespace {

void reach(const Circuit& circuit, NetId from, bool forward, std::vector<std::uint32_t>& mark,
           std::uint32_t stamp) {
  std::vector<NetId> stack{from};
  mark[from] = stamp;
  while (!stack.empty()) {
    const NetId net = stack.back();
    stack.pop_back();
    if (forward) {
      for (const FanoutPin& f : circuit.fanouts(net)) {
        const NetId out = circuit.gate(f.gate).output;
        if (mark[out] != stamp) {
          mark[out] = stamp;
          stack.push_back(out);
        }
      }
    } else if (!circuit.is_input(net)) {
      for (NetId in : circuit.gate(circuit.driver(net)).inputs) {
        if (mark[in] != stamp) {
          mark[in] = stamp;
          stack.push_back(in);
        }
      }
    }
  }
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorKind::LengthMismatch,
                "lengths " + std::to_string(a) + " and " + std::to_string(b) + " differ");
  }
}

}  // namespace

PrunedBasis prune_states(const Circuit& circuit, const RareNetSet& rare,
                         const SwitchingProfile& profile) {
  const std::size_t k = rare.size();
  std::vector<NetId> nets;
  for (const auto& m : rare.members) nets.push_back(m.net);
  auto rows = random_value_rows(circuit, nets, profile.total, profile.seed);
  const std::uint64_t tail = profile.total % 64 == 0 ? ~0ULL : (1ULL << (profile.total % 64)) - 1;
  for (std::size_t i = 0; i < k; ++i) {
    if (rare.members[i].rare_value == 0) {
      for (auto& w : rows[i]) w = ~w;
      if (!rows[i].empty()) rows[i].back() &= tail;
    }
  }
  auto support = [&](std::size_t i) {
    return std::any_of(rows[i].begin(), rows[i].end(), [](std::uint64_t w) { return w != 0; });
  };
  auto implies = [&](std::size_t a, std::size_t b) {
    for (std::size_t w = 0; w < rows[a].size(); ++w) {
      if ((rows[a][w] & ~rows[b][w]) != 0) return false;
    }
    return true;
  };

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double aa = profile.activity[nets[a]];
    const double ab = profile.activity[nets[b]];
    return aa != ab ? aa < ab : nets[a] < nets[b];
  });

  std::vector<std::uint8_t> taken(k, 0);
  std::vector<std::uint32_t> fwd(circuit.net_count(), 0);
  std::vector<std::uint32_t> bwd(circuit.net_count(), 0);
  struct Group {
    std::size_t rep;
    std::vector<NetId> members;
  };
  std::vector<Group> groups;
  std::uint32_t stamp = 0;
  for (std::size_t oi = 0; oi < k; ++oi) {
    const std::size_t rep = order[oi];
    if (taken[rep]) continue;
    taken[rep] = 1;
    Group g{rep, {}};
    // A representative never seen at its rare value implies nothing useful.
    if (support(rep)) {
      ++stamp;
      reach(circuit, nets[rep], true, fwd, stamp);
      reach(circuit, nets[rep], false, bwd, stamp);
      for (std::size_t oj = oi + 1; oj < k; ++oj) {
        const std::size_t other = order[oj];
        if (taken[other]) continue;
        const NetId net = nets[other];
        if (fwd[net] != stamp && bwd[net] != stamp) continue;
        if (!implies(rep, other)) continue;
        taken[other] = 1;
        g.members.push_back(net);
      }
    }
    std::sort(g.members.begin(), g.members.end());
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(),
            [&](const Group& a, const Group& b) { return nets[a.rep] < nets[b.rep]; });
  PrunedBasis basis;
  for (auto& g : groups) {
    basis.representatives.push_back(nets[g.rep]);
    basis.rare_values.push_back(rare.members[g.rep].rare_value);
    basis.activity.push_back(profile.activity[nets[g.rep]]);
    basis.absorbed.push_back(std::move(g.members));
  }
  return basis;
}

double reward_ssd(const DetectionState& prev, const DetectionState& cur, const SsdConfig& cfg) {
  check_lengths(prev.size(), cur.size());
  double seq = 0.0;
  double imd = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (prev[i] == 0 && cur[i] == 0) seq -= 1.0;
    else if (prev[i] == 1 && cur[i] == 0) seq -= 3.0;
    else if (prev[i] == 0 && cur[i] == 1) seq += 40.0;
    else seq += 20.0;
    if (cur[i] == 1) imd += 1.0;
  }
  return cfg.lambda1 * seq + cfg.lambda2 * imd;
}

std::vector<double> sad_rewards(std::span<const double> switching) {
  std::vector<double> r(switching.size(), 0.0);
  double max_reward = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < switching.size(); ++i) {
    if (switching[i] > 0.0) {
      r[i] = 1.0 / switching[i];
      max_reward = any ? std::max(max_reward, r[i]) : r[i];
      any = true;
    }
  }
  // With no nonzero activity at all, the zero-activity nets fall back to 10.
  if (!any) max_reward = 1.0;
  for (std::size_t i = 0; i < switching.size(); ++i) {
    if (!(switching[i] > 0.0)) r[i] = 10.0 * max_reward;
  }
  return r;
}

double reward_cod(std::span<const double> rewards, const DetectionState& state) {
  check_lengths(rewards.size(), state.size());
  double total = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) total += state[i] ? rewards[i] : -1.0;
  return total;
}

double reward_sad(std::span<const double> switching, const DetectionState& state) {
  check_lengths(switching.size(), state.size());
  const std::vector<double> r = sad_rewards(switching);
  return reward_cod(r, state);
}

DetectionEnv::DetectionEnv(const Circuit& circuit, PrunedBasis basis, DetectionConfig cfg,
                           std::vector<double> reward_inputs)
    : circuit_(circuit), basis_(std::move(basis)), cfg_(cfg) {
  if (basis_.size() == 0) throw Error(ErrorKind::DomainError, "detection basis is empty");
  if (cfg_.episode_length == 0) {
    throw Error(ErrorKind::DomainError, "episode length must be positive");
  }
  switch (cfg_.detector) {
    case Detector::Ssd: break;
    case Detector::Sad:
      if (reward_inputs.empty()) reward_inputs = basis_.activity;
      check_lengths(reward_inputs.size(), basis_.size());
      per_net_reward_ = sad_rewards(reward_inputs);
      break;
    case Detector::Cod:
      check_lengths(reward_inputs.size(), basis_.size());
      per_net_reward_ = std::move(reward_inputs);
      break;
  }
}

DetectionState DetectionEnv::state_of(const TestVector& vector) const {
  const auto values = simulate_scalar(circuit_, vector);
  DetectionState s(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    s[i] = values[basis_.representatives[i]] == basis_.rare_values[i] ? 1 : 0;
  }
  return s;
}

Observation DetectionEnv::observe() const { return Observation(state_.begin(), state_.end()); }

Observation DetectionEnv::do_reset(Rng& rng) {
  vector_.assign(circuit_.inputs().size(), 0);
  for (auto& bit : vector_) bit = static_cast<std::uint8_t>(rng.next() >> 63);
  state_ = state_of(vector_);
  steps_ = 0;
  return observe();
}

StepResult DetectionEnv::do_step(const Action& action) {
  ++steps_;
  for (std::size_t i = 0; i < vector_.size(); ++i) vector_[i] ^= static_cast<std::uint8_t>(action[i]);
  DetectionState next = state_of(vector_);
  StepResult r;
  switch (cfg_.detector) {
    case Detector::Ssd: r.reward = reward_ssd(state_, next, cfg_.ssd); break;
    case Detector::Sad:
    case Detector::Cod: r.reward = reward_cod(per_net_reward_, next); break;
  }
  state_ = std::move(next);
  r.truncated = steps_ >= cfg_.episode_length;
  r.observation = observe();
  return r;
}

DetectorSetup prepare_detector(const Circuit& circuit, Detector detector,
                               const SwitchingProfile& profile, const ScoapTable& scoap,
                               const StaticRareConfig& thresholds, double theta) {
  DetectorSetup setup;
  if (detector == Detector::Cod) {
    setup.rare = extract_rare_static(scoap, thresholds);
  } else {
    DynamicRareConfig dyn;
    dyn.theta = theta;
    dyn.n_vectors = profile.total;
    dyn.seed = profile.seed;
    setup.rare = extract_rare_dynamic(profile, dyn);
  }
  setup.basis = prune_states(circuit, setup.rare, profile);
  if (detector == Detector::Sad) {
    setup.reward_inputs = setup.basis.activity;
  } else if (detector == Detector::Cod) {
    for (std::size_t i = 0; i < setup.basis.size(); ++i) {
      setup.reward_inputs.push_back(
          static_cast<double>(scoap.cc(setup.basis.representatives[i], setup.basis.rare_values[i])));
    }
  }
  return setup;
}

double harvest_cutoff(const TrainingCurve& curve, double fraction) {
  if (curve.episodes.empty()) return 0.0;
  return fraction * curve.episodes.back().reward;
}

VectorHarvest harvest_vectors(const PolicyParams& params, DetectionEnv& env, std::size_t episodes,
                              double cutoff, std::uint64_t seed, PolicyMode mode) {
  VectorHarvest h;
  std::set<TestVector> seen;
  run_policy(
      params, env, episodes, mode, seed,
      [&](const StepContext& ctx) {
        if (!(ctx.result.reward > cutoff)) return;
        ++h.raw;
        if (seen.insert(env.vector()).second) h.vectors.push_back(env.vector());
      },
      false);
  return h;
}

std::vector<TestVector> combine_suites(std::span<const std::vector<TestVector>> suites) {
  std::vector<TestVector> out;
  std::set<TestVector> seen;
  for (const auto& suite : suites) {
    for (const auto& v : suite) {
      if (seen.insert(v).second) out.push_back(v);
    }
  }
  return out;
}

}  // namespace htrl
