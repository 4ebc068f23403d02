#include <doctest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "htrl/atpg.hpp"
#include "htrl/error.hpp"
#include "htrl/insertion_env.hpp"
#include "htrl/logic_sim.hpp"
#include "htrl/netlist_io.hpp"
#include "support.hpp"

using namespace htrl;

namespace {

RareNetSet rare_of(const Circuit& c, const std::vector<std::string>& nets) {
  RareNetSet r;
  std::vector<NetId> ids;
  for (const auto& n : nets) ids.push_back(*c.find_net(n));
  std::sort(ids.begin(), ids.end());
  for (NetId id : ids) r.members.push_back({id, 0, 0.5});
  return r;
}

InsertionConfig small_config(std::size_t triggers) {
  InsertionConfig cfg;
  cfg.trigger_count = triggers;
  cfg.episode_length = 5;
  return cfg;
}

Action all(std::size_t n, Move m) { return Action(n, static_cast<int>(m)); }

// Triggers at levels 2 and 1 under a level-3 target.
constexpr const char* kLevels = R"(
module lv(a, b, c, d, y, z);
  input a, b, c, d;
  output y, z;
  wire n1, n2, n3;
  and g1 (n1, a, b);
  and g2 (n2, n1, c);
  or g3 (n3, n2, d);
  buf g4 (y, n3);
  and g5 (z, n2, a);
endmodule
)";

}  // namespace

TEST_SUITE("insertion_env") {
  TEST_CASE("reward table") {
    CHECK(insertion_reward(0) == -1.0);
    CHECK(insertion_reward(1) == 8.0);
    CHECK(insertion_reward(2) == 16.0);
    CHECK(insertion_reward(3) == 100.0);
    CHECK(insertion_reward(4) == 1000.0);
    CHECK(insertion_reward(5) == 10000.0);
    for (std::size_t k = 1; k < 5; ++k) CHECK(insertion_reward(k) < insertion_reward(k + 1));
    CHECK(kInsertionFailReward < 0.0);
  }

  TEST_CASE("state vector of a two-trigger placement") {
    const Circuit c = test::circuit_from_verilog(kLevels);
    InsertionEnv env(c, rare_of(c, {"n1", "n2"}), small_config(2));
    env.place({*c.find_net("n2"), *c.find_net("n1")}, *c.find_net("n3"));
    CHECK(env.state() == std::vector<std::uint32_t>{2, 1, 3, 4});
    // The payload level matches the spliced circuit.
    const auto s = splice_trojan(c, env.trojan());
    CHECK(s.circuit.level(s.payload_out) == 4);
  }

  TEST_CASE("resets obey the insertion rules") {
    const Circuit c = load_circuit(test::benchmark("c432"));
    const auto cal = calibrate_thresholds(c);
    const auto scoap = compute_scoap(c);
    InsertionEnv env(c, scoap, extract_rare_static(scoap, cal.config), InsertionConfig{});
    Rng rng(1);
    const std::set<NetId> eligible(env.eligible_targets().begin(), env.eligible_targets().end());
    std::map<NetId, std::size_t> hits;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto obs = env.reset(rng);
      CHECK(obs.size() == 7);
      const auto& t = env.trojan();
      REQUIRE(t.trigger_nets.size() == 5);
      CHECK(std::set<NetId>(t.trigger_nets.begin(), t.trigger_nets.end()).size() == 5);
      CHECK(eligible.count(t.target_net) == 1);
      CHECK_FALSE(c.is_input(t.target_net));
      for (NetId tr : t.trigger_nets) CHECK(c.level(tr) < c.level(t.target_net));
      const auto s = env.state();
      CHECK(s[5] < s[6]);
      ++hits[t.target_net];
    }
    // Chi-square against the uniform distribution over eligible targets.
    const double expected = static_cast<double>(n) / static_cast<double>(eligible.size());
    double chi2 = 0.0;
    for (NetId t : eligible) {
      const double d = static_cast<double>(hits[t]) - expected;
      chi2 += d * d / expected;
    }
    const double df = static_cast<double>(eligible.size() - 1);
    CHECK(chi2 < df + 5.0 * std::sqrt(2.0 * df));
  }

  TEST_CASE("P_high with every rare net at level 1") {
    const Circuit c = test::circuit_from_verilog(kLevels);
    auto cfg = small_config(2);
    cfg.payload_mode = PayloadMode::High;
    InsertionEnv env(c, rare_of(c, {"n1"}), cfg);
    std::set<NetId> expected;
    for (NetId n = 0; n < c.net_count(); ++n) {
      if (c.level(n) >= 2) expected.insert(n);
    }
    CHECK(std::set<NetId>(env.eligible_targets().begin(), env.eligible_targets().end()) == expected);
  }

  TEST_CASE("P_high excludes targets that see too few rare nets") {
    const Circuit c = test::circuit_from_verilog(kLevels);
    auto cfg = small_config(2);
    cfg.payload_mode = PayloadMode::High;
    // Level-3 targets see only n2 of the two rare nets; y at level 4 sees both.
    InsertionEnv env(c, rare_of(c, {"n2", "n3"}), cfg);
    CHECK(env.eligible_targets() == std::vector<NetId>{*c.find_net("y")});
  }

  TEST_CASE("infeasible reset") {
    const Circuit c = test::circuit_from_verilog(test::kAnd2);
    InsertionEnv env(c, RareNetSet{}, small_config(3));
    Rng rng(0);
    try {
      env.reset(rng);
      FAIL("expected InfeasibleReset");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleReset);
    }
  }

  TEST_CASE("certified Trojan with three rare triggers earns 100") {
    const Circuit c = test::circuit_from_verilog(test::kXorSplit);
    InsertionEnv env(c, rare_of(c, {"a", "b", "c"}), small_config(3));
    Rng rng(0);
    env.reset(rng);
    env.place({*c.find_net("a"), *c.find_net("b"), *c.find_net("c")}, *c.find_net("e"));
    const auto r = env.step(all(3, Move::NoAction));
    CHECK(r.reward == 100.0);
    CHECK(env.last_step().certified);
    CHECK(env.trojan().rare_trigger_count == 3);
    REQUIRE(env.trojan().activation_vector.has_value());
    CHECK(activates(c, env.trojan(), *env.trojan().activation_vector));
  }

  TEST_CASE("untestable Trojan earns -1") {
    const Circuit c = test::circuit_from_verilog(R"(
module m(a, b, c, y);
  input a, b, c;
  output y;
  wire e;
  xor g1 (e, a, b);
  and g2 (y, e, c);
endmodule)");
    InsertionEnv env(c, rare_of(c, {"a", "c"}), small_config(2));
    Rng rng(0);
    env.reset(rng);
    env.place({*c.find_net("a"), *c.find_net("c")}, *c.find_net("e"));
    const auto r = env.step(all(2, Move::NoAction));
    CHECK(r.reward == -1.0);
    CHECK_FALSE(env.last_step().certified);
    CHECK_FALSE(env.trojan().activation_vector.has_value());
  }

  TEST_CASE("NoAction keeps the state and re-evaluates the same reward") {
    const Circuit c = load_circuit(test::benchmark("c432"));
    const auto scoap = compute_scoap(c);
    InsertionEnv env(c, scoap, extract_rare_static(scoap, calibrate_thresholds(scoap).config),
                     InsertionConfig{});
    Rng rng(3);
    env.reset(rng);
    const auto before = env.state();
    const auto triggers = env.trojan().trigger_nets;
    const auto r1 = env.step(all(5, Move::NoAction));
    const auto r2 = env.step(all(5, Move::NoAction));
    CHECK(env.state() == before);
    CHECK(env.trojan().trigger_nets == triggers);
    CHECK(r1.reward == r2.reward);
    CHECK(r1.observation == r2.observation);
    CHECK(env.memo_size() == 1);
  }

  TEST_CASE("moves saturate at the boundaries") {
    const Circuit c = test::circuit_from_verilog(kLevels);
    InsertionEnv env(c, RareNetSet{}, small_config(2));
    Rng rng(0);
    env.reset(rng);
    const NetId a = *c.find_net("a"), d = *c.find_net("d"), n3 = *c.find_net("n3");
    // a is the first level-0 net, d the last.
    env.place({a, d}, n3);
    env.step({static_cast<int>(Move::SameLevelDown), static_cast<int>(Move::SameLevelUp)});
    CHECK(env.trojan().trigger_nets == std::vector<NetId>{a, d});
    env.step({static_cast<int>(Move::PrevLevel), static_cast<int>(Move::NoAction)});
    CHECK(env.trojan().trigger_nets == std::vector<NetId>{a, d});
    // Moving onto a net held by another trigger is refused too.
    env.place({*c.find_net("b"), *c.find_net("c")}, n3);
    env.step({static_cast<int>(Move::SameLevelUp), static_cast<int>(Move::NoAction)});
    CHECK(env.trojan().trigger_nets == std::vector<NetId>{*c.find_net("b"), *c.find_net("c")});
    env.step({static_cast<int>(Move::SameLevelDown), static_cast<int>(Move::NoAction)});
    CHECK(env.trojan().trigger_nets == std::vector<NetId>{a, *c.find_net("c")});
  }

  TEST_CASE("reaching the target level ends the episode") {
    const Circuit c = test::circuit_from_verilog(kLevels);
    InsertionEnv env(c, RareNetSet{}, small_config(2));
    Rng rng(0);
    env.reset(rng);
    env.place({*c.find_net("n2"), *c.find_net("a")}, *c.find_net("n3"));
    // The only free level-3 net is z.
    const auto r = env.step({static_cast<int>(Move::NextLevel), static_cast<int>(Move::NoAction)});
    CHECK(env.trojan().trigger_nets[0] == *c.find_net("z"));
    CHECK(r.terminal);
    CHECK(r.reward == -1.0);
    CHECK_FALSE(env.active());
  }

  TEST_CASE("episode budget truncates") {
    const Circuit c = test::circuit_from_verilog(test::kXorSplit);
    auto cfg = small_config(3);
    cfg.episode_length = 3;
    InsertionEnv env(c, RareNetSet{}, cfg);
    Rng rng(0);
    env.reset(rng);
    env.place({*c.find_net("a"), *c.find_net("b"), *c.find_net("c")}, *c.find_net("e"));
    CHECK_FALSE(env.step(all(3, Move::NoAction)).done());
    CHECK_FALSE(env.step(all(3, Move::NoAction)).done());
    const auto last = env.step(all(3, Move::NoAction));
    CHECK(last.truncated);
    CHECK_FALSE(last.terminal);
  }

  TEST_CASE("harvest deduplicates and keeps only rewarded Trojans") {
    const Circuit c = test::circuit_from_verilog(test::kXorSplit);
    InsertionEnv env(c, rare_of(c, {"a", "b", "c"}), small_config(3));
    Rng rng(0);
    env.reset(rng);
    env.place({*c.find_net("a"), *c.find_net("b"), *c.find_net("c")}, *c.find_net("e"));
    TrojanHarvest h;
    env.step(all(3, Move::NoAction));
    collect_trojan(env, 1, h);
    env.step(all(3, Move::NoAction));
    collect_trojan(env, 1, h);
    CHECK(h.trojans.size() == 1);
    CHECK(h.rewarded_steps == 2);
    CHECK(h.by_rare_count.at(3) == 1);
    TrojanHarvest strict;
    collect_trojan(env, 4, strict);
    CHECK(strict.trojans.empty());

    // Trigger order does not matter for the key.
    TrojanInstance x = env.trojan();
    std::swap(x.trigger_nets[0], x.trigger_nets[2]);
    std::swap(x.polarities[0], x.polarities[2]);
    CHECK(trojan_key(x) == trojan_key(env.trojan()));
  }

  TEST_CASE("policy harvest on c17 is sound") {
    const Circuit c = load_circuit(test::benchmark("c17"));
    const auto scoap = compute_scoap(c);
    RareNetSet every;
    for (NetId n = 0; n < c.net_count(); ++n) every.members.push_back({n, scoap.rare_value(n), 0.0});
    InsertionConfig cfg;
    cfg.trigger_count = 2;
    cfg.episode_length = 20;
    InsertionEnv env(c, scoap, every, cfg);
    Rng rng(0);
    const auto params = init_policy(env.observation_width(), env.action_spec(), {16}, rng);
    const auto h = harvest_trojans(params, env, 30, 1);
    CHECK_FALSE(h.trojans.empty());
    std::set<std::vector<NetId>> keys;
    for (const auto& t : h.trojans) {
      REQUIRE(t.activation_vector.has_value());
      CHECK(activates(c, t, *t.activation_vector));
      CHECK(keys.insert(trojan_key(t)).second);
    }
    const auto again = harvest_trojans(params, env, 30, 1);
    CHECK(again.keys == h.keys);
  }
}
