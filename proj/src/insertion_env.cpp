#include "htrl/insertion_env.hpp"

#include <algorithm>

#include "htrl/error.hpp"
#include "htrl/ppo.hpp"

namespace htrl {

double insertion_reward(std::size_t rare) {
  switch (rare) {
    case 0: return kInsertionFailReward;
    case 1: return 8.0;
    case 2: return 16.0;
    case 3: return 100.0;
    case 4: return 1000.0;
    default: return 10000.0;
  }
}

std::uint32_t payload_level(const Circuit& circuit, const TrojanInstance& trojan) {
  std::vector<std::uint32_t> levels;
  for (std::size_t i = 0; i < trojan.trigger_nets.size(); ++i) {
    const std::uint32_t l = circuit.level(trojan.trigger_nets[i]);
    levels.push_back(trojan.polarities[i] == 0 ? l + 1 : l);
  }
  // Same pairing as splice_into.
  while (levels.size() > 1) {
    std::vector<std::uint32_t> next;
    for (std::size_t i = 0; i + 1 < levels.size(); i += 2) {
      next.push_back(std::max(levels[i], levels[i + 1]) + 1);
    }
    if (levels.size() % 2 == 1) next.push_back(levels.back());
    levels = std::move(next);
  }
  const std::uint32_t root = levels.empty() ? 0 : levels.front();
  return std::max(circuit.level(trojan.target_net), root) + 1;
}

InsertionEnv::InsertionEnv(const Circuit& circuit, RareNetSet rare, InsertionConfig cfg)
    : InsertionEnv(circuit, compute_scoap(circuit), std::move(rare), cfg) {}

InsertionEnv::InsertionEnv(const Circuit& circuit, ScoapTable scoap, RareNetSet rare,
                           InsertionConfig cfg)
    : circuit_(circuit),
      scoap_(std::move(scoap)),
      rare_(std::move(rare)),
      cfg_(cfg),
      podem_(circuit, scoap_) {
  if (cfg_.trigger_count == 0) throw Error(ErrorKind::DomainError, "trigger count must be positive");
  if (cfg_.episode_length == 0) {
    throw Error(ErrorKind::DomainError, "episode length must be positive");
  }
  below_count_.assign(circuit.max_level() + 2, 0);
  for (std::uint32_t l = 1; l <= circuit.max_level() + 1; ++l) {
    below_count_[l] = below_count_[l - 1] + circuit.nets_at_level(l - 1).size();
  }
  std::vector<std::size_t> rare_below(circuit.max_level() + 2, 0);
  for (const auto& m : rare_.members) ++rare_below[circuit.level(m.net) + 1];
  for (std::size_t l = 1; l < rare_below.size(); ++l) rare_below[l] += rare_below[l - 1];

  for (NetId net = 0; net < circuit.net_count(); ++net) {
    if (circuit.is_input(net)) continue;
    const std::uint32_t l = circuit.level(net);
    if (below_count_[l] < cfg_.trigger_count) continue;
    if (cfg_.payload_mode == PayloadMode::High && !rare_.empty()) {
      const double covered = static_cast<double>(rare_below[l]);
      if (covered < cfg_.high_coverage * static_cast<double>(rare_.size())) continue;
    }
    eligible_.push_back(net);
  }
}

std::vector<std::uint32_t> InsertionEnv::state() const {
  std::vector<std::uint32_t> s;
  for (NetId t : trojan_.trigger_nets) s.push_back(circuit_.level(t));
  s.push_back(circuit_.level(trojan_.target_net));
  s.push_back(payload_level(circuit_, trojan_));
  return s;
}

Observation InsertionEnv::observe() const {
  const double scale = circuit_.max_level() == 0 ? 1.0 : static_cast<double>(circuit_.max_level());
  Observation obs;
  for (std::uint32_t l : state()) obs.push_back(static_cast<double>(l) / scale);
  return obs;
}

void InsertionEnv::refresh_polarities() {
  trojan_.polarities.clear();
  std::size_t rare = 0;
  for (NetId t : trojan_.trigger_nets) {
    trojan_.polarities.push_back(scoap_.rare_value(t));
    if (rare_.contains(t)) ++rare;
  }
  trojan_.rare_trigger_count = static_cast<std::uint32_t>(rare);
}

Observation InsertionEnv::do_reset(Rng& rng) {
  if (eligible_.empty()) {
    throw Error(ErrorKind::InfeasibleReset,
                "no target net has " + std::to_string(cfg_.trigger_count) +
                    " nets below it under the payload mode");
  }
  rng_ = Rng(rng.next());
  trojan_ = TrojanInstance{};
  trojan_.target_net = eligible_[rng_.uniform(eligible_.size())];
  // Partial Fisher-Yates over the nets below the target.
  const std::size_t pool_size = below_count_[circuit_.level(trojan_.target_net)];
  std::vector<NetId> pool;
  pool.reserve(pool_size);
  for (std::uint32_t l = 0; l < circuit_.level(trojan_.target_net); ++l) {
    for (NetId n : circuit_.nets_at_level(l)) pool.push_back(n);
  }
  for (std::size_t i = 0; i < cfg_.trigger_count; ++i) {
    const std::size_t j = i + rng_.uniform(pool.size() - i);
    std::swap(pool[i], pool[j]);
    trojan_.trigger_nets.push_back(pool[i]);
  }
  refresh_polarities();
  steps_ = 0;
  last_ = {};
  return observe();
}

void InsertionEnv::place(const std::vector<NetId>& triggers, NetId target) {
  trojan_ = TrojanInstance{};
  trojan_.trigger_nets = triggers;
  trojan_.target_net = target;
  refresh_polarities();
  check_trojan_rules(circuit_, trojan_);
}

bool InsertionEnv::occupied(NetId net, std::size_t except) const {
  if (net == trojan_.target_net) return true;
  for (std::size_t i = 0; i < trojan_.trigger_nets.size(); ++i) {
    if (i != except && trojan_.trigger_nets[i] == net) return true;
  }
  return false;
}

void InsertionEnv::move(std::size_t trigger, Move m) {
  const NetId net = trojan_.trigger_nets[trigger];
  const std::uint32_t level = circuit_.level(net);
  switch (m) {
    case Move::NextLevel:
    case Move::PrevLevel: {
      if (m == Move::PrevLevel && level == 0) return;
      const std::uint32_t to = m == Move::NextLevel ? level + 1 : level - 1;
      if (to > circuit_.max_level()) return;
      std::vector<NetId> free;
      for (NetId n : circuit_.nets_at_level(to)) {
        if (!occupied(n, trigger)) free.push_back(n);
      }
      if (free.empty()) return;
      trojan_.trigger_nets[trigger] = free[rng_.uniform(free.size())];
      return;
    }
    case Move::SameLevelUp:
    case Move::SameLevelDown: {
      const auto row = circuit_.nets_at_level(level);
      const auto pos = static_cast<std::size_t>(std::lower_bound(row.begin(), row.end(), net) - row.begin());
      std::size_t to = pos;
      if (m == Move::SameLevelUp) {
        if (pos + 1 >= row.size()) return;
        to = pos + 1;
      } else {
        if (pos == 0) return;
        to = pos - 1;
      }
      if (occupied(row[to], trigger)) return;
      trojan_.trigger_nets[trigger] = row[to];
      return;
    }
    case Move::NoAction: return;
  }
}

const InsertionEnv::Certification& InsertionEnv::certify() {
  std::vector<NetId> key = trojan_.trigger_nets;
  std::sort(key.begin(), key.end());
  key.push_back(trojan_.target_net);
  auto it = memo_.find(key);
  if (it == memo_.end()) {
    const AtpgResult r = podem_.activate(trojan_, cfg_.backtrack_limit);
    it = memo_.emplace(std::move(key), Certification{r.outcome, r.vector}).first;
  }
  return it->second;
}

StepResult InsertionEnv::do_step(const Action& action) {
  ++steps_;
  for (std::size_t i = 0; i < action.size(); ++i) move(i, static_cast<Move>(action[i]));
  refresh_polarities();
  trojan_.activation_vector.reset();
  last_ = {};
  last_.rare_triggers = trojan_.rare_trigger_count;

  StepResult r;
  const std::uint32_t target_level = circuit_.level(trojan_.target_net);
  r.terminal = std::any_of(trojan_.trigger_nets.begin(), trojan_.trigger_nets.end(),
                           [&](NetId t) { return circuit_.level(t) >= target_level; });
  if (r.terminal) {
    r.reward = kInsertionFailReward;
  } else {
    const Certification& c = certify();
    if (c.outcome == AtpgOutcome::Vector) {
      last_.certified = true;
      trojan_.activation_vector = c.vector;
      r.reward = insertion_reward(trojan_.rare_trigger_count);
    } else {
      r.reward = kInsertionFailReward;
    }
  }
  last_.reward = r.reward;
  r.truncated = !r.terminal && steps_ >= cfg_.episode_length;
  r.observation = observe();
  return r;
}

std::vector<NetId> trojan_key(const TrojanInstance& trojan) {
  std::vector<std::pair<NetId, std::uint8_t>> pairs;
  for (std::size_t i = 0; i < trojan.trigger_nets.size(); ++i) {
    pairs.emplace_back(trojan.trigger_nets[i], trojan.polarities[i]);
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<NetId> key;
  for (const auto& [net, pol] : pairs) {
    key.push_back(net);
    key.push_back(pol);
  }
  key.push_back(trojan.target_net);
  return key;
}

void collect_trojan(const InsertionEnv& env, std::size_t min_rare, TrojanHarvest& harvest) {
  const InsertionStepInfo& info = env.last_step();
  if (!info.certified || info.reward <= 0.0 || info.rare_triggers < min_rare) return;
  ++harvest.rewarded_steps;
  const TrojanInstance& t = env.trojan();
  if (!harvest.keys.insert(trojan_key(t)).second) return;
  harvest.trojans.push_back(t);
  ++harvest.by_rare_count[t.rare_trigger_count];
}

TrojanHarvest harvest_trojans(const PolicyParams& params, InsertionEnv& env, std::size_t episodes,
                              std::uint64_t seed, std::size_t min_rare, PolicyMode mode) {
  TrojanHarvest harvest;
  run_policy(params, env, episodes, mode, seed,
             [&](const StepContext&) { collect_trojan(env, min_rare, harvest); }, false);
  return harvest;
}

}  // namespace htrl
