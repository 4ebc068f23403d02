#include <doctest.h>

#include "fixtures.hpp"
#include "htrl/atpg.hpp"
#include "htrl/logic_sim.hpp"
#include "htrl/netlist_io.hpp"
#include "support.hpp"

using namespace htrl;

namespace {

std::vector<std::string> names(const Circuit& c, const std::vector<NetId>& nets) {
  std::vector<std::string> out;
  for (NetId n : nets) out.push_back(c.net_name(n));
  return out;
}

}  // namespace

TEST_SUITE("atpg_podem") {
  TEST_CASE("justify an AND output") {
    const Circuit c = test::circuit_from_verilog(test::kAnd2);
    const AtpgObjective obj[] = {{*c.find_net("y"), 1}};
    const auto r = justify(c, obj);
    REQUIRE(r.outcome == AtpgOutcome::Vector);
    CHECK(r.vector == TestVector{1, 1});
  }

  TEST_CASE("contradictory objectives are untestable") {
    const Circuit c = test::circuit_from_verilog(R"(
module m(a, b, y);
  input a, b;
  output y;
  wire n, m;
  and g1 (n, a, b);
  not g2 (m, n);
  or g3 (y, n, m);
endmodule)");
    const AtpgObjective obj[] = {{*c.find_net("n"), 1}, {*c.find_net("m"), 1}};
    CHECK(justify(c, obj).outcome == AtpgOutcome::Untestable);
  }

  TEST_CASE("justified vectors are sound and fully assigned") {
    const Circuit c = load_circuit(test::benchmark("c432"));
    PodemEngine engine(c);
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<AtpgObjective> objs;
      for (int k = 0; k < 3; ++k) {
        objs.push_back({static_cast<NetId>(rng.uniform(c.net_count())), static_cast<std::uint8_t>(rng.uniform(2))});
      }
      const auto r = engine.justify(objs);
      if (r.outcome != AtpgOutcome::Vector) continue;
      CHECK(r.vector.size() == c.inputs().size());
      const auto vals = simulate_scalar(c, r.vector);
      for (const auto& o : objs) CHECK(vals[o.net] == o.value);
    }
  }

  TEST_CASE("justify matches enumeration on random circuits") {
    Rng rng(100);
    for (int trial = 0; trial < 60; ++trial) {
      const auto raw = test::random_netlist(rng, {10, 50, 4, 3});
      const Circuit c(raw);
      PodemEngine engine(c);
      std::vector<AtpgObjective> objs;
      std::vector<std::pair<std::string, std::uint8_t>> named;
      const std::size_t count = 1 + rng.uniform(3);
      for (std::size_t k = 0; k < count; ++k) {
        const NetId n = static_cast<NetId>(rng.uniform(c.net_count()));
        const auto v = static_cast<std::uint8_t>(rng.uniform(2));
        objs.push_back({n, v});
        named.emplace_back(c.net_name(n), v);
      }
      const auto r = engine.justify(objs);
      REQUIRE(r.outcome != AtpgOutcome::Aborted);
      CHECK((r.outcome == AtpgOutcome::Vector) == test::exhaustive_satisfiable(raw, named));
    }
  }

  TEST_CASE("activation on the xor-split circuit") {
    const Circuit c = test::circuit_from_verilog(test::kXorSplit);
    TrojanInstance t;
    t.trigger_nets = {*c.find_net("a"), *c.find_net("b"), *c.find_net("c")};
    t.polarities = {1, 1, 0};
    t.target_net = *c.find_net("e");
    const auto r = activation_vector(c, t);
    REQUIRE(r.outcome == AtpgOutcome::Vector);
    CHECK(r.vector[0] == 1);
    CHECK(r.vector[1] == 1);
    CHECK(r.vector[2] == 0);
    CHECK(activates(c, t, r.vector));
    const auto mm = compare_outputs(c, splice_trojan(c, t).circuit, std::vector<TestVector>{r.vector});
    REQUIRE(mm.size() == 1);
    CHECK(mm[0].outputs == std::vector<std::uint32_t>{0});
  }

  TEST_CASE("masked payload is untestable") {
    // When the trigger fires c is 0, so the AND blocks the flipped target.
    const char* src = R"(
module m(a, b, c, y);
  input a, b, c;
  output y;
  wire e;
  xor g1 (e, a, b);
  and g2 (y, e, c);
endmodule)";
    const Circuit c = test::circuit_from_verilog(src);
    TrojanInstance t;
    t.trigger_nets = {*c.find_net("a"), *c.find_net("c")};
    t.polarities = {1, 0};
    t.target_net = *c.find_net("e");
    CHECK(activation_vector(c, t).outcome == AtpgOutcome::Untestable);
    CHECK_FALSE(test::exhaustive_activatable(c.to_raw(), {"a", "c"}, {1, 0}, "e"));
  }

  TEST_CASE("complementary trigger polarities are untestable") {
    const Circuit c = test::circuit_from_verilog(R"(
module m(a, b, y);
  input a, b;
  output y;
  wire n, p, q;
  not g1 (n, a);
  and g2 (p, n, b);
  xor g3 (q, p, b);
  buf g4 (y, q);
endmodule)");
    TrojanInstance t;
    t.trigger_nets = {*c.find_net("a"), *c.find_net("n")};
    t.polarities = {1, 1};
    t.target_net = *c.find_net("q");
    CHECK(activation_vector(c, t).outcome == AtpgOutcome::Untestable);
  }

  TEST_CASE("activation matches enumeration on random circuits") {
    Rng rng(200);
    int vectors = 0;
    for (int trial = 0; trial < 60; ++trial) {
      const auto raw = test::random_netlist(rng, {10, 50, 4, 3});
      const Circuit c(raw);
      // Target: a gate output at level >= 1 with at least two nets below it.
      const NetId target = static_cast<NetId>(c.inputs().size() + rng.uniform(c.gate_count()));
      std::vector<NetId> below;
      for (NetId n = 0; n < c.net_count(); ++n) {
        if (c.level(n) < c.level(target)) below.push_back(n);
      }
      TrojanInstance t;
      for (int k = 0; k < 3 && !below.empty(); ++k) {
        const std::size_t i = rng.uniform(below.size());
        t.trigger_nets.push_back(below[i]);
        t.polarities.push_back(static_cast<std::uint8_t>(rng.uniform(2)));
        below.erase(below.begin() + static_cast<std::ptrdiff_t>(i));
      }
      t.target_net = target;
      const auto r = activation_vector(c, t);
      REQUIRE(r.outcome != AtpgOutcome::Aborted);
      const bool oracle = test::exhaustive_activatable(raw, names(c, t.trigger_nets), t.polarities,
                                                       c.net_name(target));
      CHECK((r.outcome == AtpgOutcome::Vector) == oracle);
      if (r.outcome == AtpgOutcome::Vector) {
        ++vectors;
        CHECK(activates(c, t, r.vector));
      }
    }
    CHECK(vectors > 0);
  }

  TEST_CASE("deterministic outcome and vector") {
    const Circuit c = load_circuit(test::benchmark("c880"));
    const AtpgObjective obj[] = {{static_cast<NetId>(c.net_count() - 1), 1},
                                 {static_cast<NetId>(c.net_count() - 40), 0}};
    const auto a = justify(c, obj);
    const auto b = justify(c, obj);
    CHECK(a.outcome == b.outcome);
    CHECK(a.vector == b.vector);
    CHECK(a.backtracks == b.backtracks);
  }

  TEST_CASE("budget exhaustion reports Aborted") {
    // AND(a,b)=1 with XOR(a,b)=1 is refuted only after backtracking.
    const Circuit c = test::circuit_from_verilog(R"(
module m(a, b, y, z);
  input a, b;
  output y, z;
  and g1 (y, a, b);
  xor g2 (z, a, b);
endmodule)");
    const AtpgObjective obj[] = {{*c.find_net("y"), 1}, {*c.find_net("z"), 1}};
    const auto aborted = justify(c, obj, 0);
    CHECK(aborted.outcome == AtpgOutcome::Aborted);
    CHECK(aborted.backtracks == 0);
    const auto full = justify(c, obj);
    CHECK(full.outcome == AtpgOutcome::Untestable);
    CHECK(full.backtracks > 0);
  }
}
