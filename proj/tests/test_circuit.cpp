#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "htrl/error.hpp"
#include "htrl/logic_sim.hpp"
#include "htrl/netlist_io.hpp"
#include "support.hpp"

using namespace htrl;

namespace {

TrojanInstance xor_split_trojan(const Circuit& c) {
  TrojanInstance t;
  t.trigger_nets = {*c.find_net("a"), *c.find_net("b"), *c.find_net("c")};
  t.polarities = {1, 1, 0};
  t.target_net = *c.find_net("e");
  return t;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an htrl::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("circuit_graph") {
  TEST_CASE("levels follow the longest path") {
    const Circuit c = test::circuit_from_verilog(R"(
module m(a, b, c, y);
  input a, b, c;
  output y;
  wire n1, n2, n3, n4;
  not g1 (n1, a);
  not g2 (n2, n1);
  not g3 (n3, n2);
  and g4 (n4, n2, b);
  or g5 (y, n4, n3);
endmodule)");
    for (NetId pi : c.inputs()) CHECK(c.level(pi) == 0);
    CHECK(c.level(*c.find_net("n2")) == 2);
    CHECK(c.level(*c.find_net("n3")) == 3);
    // Inputs at levels 2 and 3 give 4.
    CHECK(c.level(*c.find_net("y")) == 4);
    CHECK(c.max_level() == 4);
    CHECK(levelize(c) == c.levels());
  }

  TEST_CASE("level soundness on every benchmark gate") {
    const Circuit c = load_circuit(test::benchmark("c880"));
    for (const Gate& g : c.gates()) {
      std::uint32_t m = 0;
      for (NetId in : g.inputs) m = std::max(m, c.level(in));
      CHECK(c.level(g.output) == m + 1);
    }
  }

  TEST_CASE("nets_at_level partitions the nets") {
    const Circuit c = load_circuit(test::benchmark("c432"));
    const auto l0 = nets_at_level(c, 0);
    CHECK(std::vector<NetId>(c.inputs().begin(), c.inputs().end()) == l0);
    CHECK(std::is_sorted(l0.begin(), l0.end()));
    CHECK(nets_at_level(c, c.max_level() + 1).empty());
    std::multiset<NetId> seen;
    for (std::uint32_t l = 0; l <= c.max_level(); ++l) {
      const auto nets = nets_at_level(c, l);
      CHECK(std::is_sorted(nets.begin(), nets.end()));
      for (NetId n : nets) CHECK(c.level(n) == l);
      seen.insert(nets.begin(), nets.end());
    }
    CHECK(seen.size() == c.net_count());
    CHECK(std::set<NetId>(seen.begin(), seen.end()).size() == c.net_count());
  }

  TEST_CASE("declaration-order IDs and fanouts") {
    const Circuit c = load_circuit(test::benchmark("c17"));
    CHECK(c.net_name(0) == "N1");
    CHECK(c.net_name(4) == "N7");
    CHECK(c.is_input(0));
    CHECK_FALSE(c.is_input(5));
    CHECK(c.is_output(*c.find_net("N22")));
    CHECK(c.fanouts(*c.find_net("N11")).size() == 2);
    CHECK(c.fanouts(*c.find_net("N22")).empty());
    CHECK_FALSE(c.find_net("nope").has_value());
  }

  TEST_CASE("combinational loop carries a witness cycle") {
    try {
      test::circuit_from_verilog(R"(
module m(a, y);
  input a;
  output y;
  wire p, q;
  and g1 (p, a, q);
  not g2 (q, p);
  buf g3 (y, p);
endmodule)");
      FAIL("loop not detected");
    } catch (const CombinationalLoopError& e) {
      CHECK(e.kind() == ErrorKind::CombinationalLoop);
      const std::set<std::string> cycle(e.cycle().begin(), e.cycle().end());
      CHECK(cycle == std::set<std::string>{"p", "q"});
    }
  }

  TEST_CASE("splice on the xor-split circuit") {
    const Circuit c = test::circuit_from_verilog(test::kXorSplit);
    const auto spliced = splice_trojan(c, xor_split_trojan(c));
    // Two 2-input ANDs, one inverter and the XOR.
    CHECK(spliced.circuit.gate_count() == c.gate_count() + 4);
    CHECK(spliced.circuit.net_name(spliced.payload_out) == "e");
    CHECK(c.gate_count() == 3);
    for (std::uint64_t k = 0; k < 16; ++k) {
      const auto vec = test::enumerate_vector(4, k);
      const bool fire = vec[0] && vec[1] && !vec[2];
      CHECK((output_values(c, vec) != output_values(spliced.circuit, vec)) == fire);
    }
  }

  TEST_CASE("splice is transparent while the trigger is idle") {
    const Circuit c = load_circuit(test::benchmark("c432"));
    Rng rng(5);
    std::size_t checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
      // Random legal Trojan: target a gate output, triggers strictly below.
      const NetId target = static_cast<NetId>(c.inputs().size() + rng.uniform(c.gate_count()));
      if (c.level(target) < 2) continue;
      std::set<NetId> triggers;
      while (triggers.size() < 4) {
        const NetId n = static_cast<NetId>(rng.uniform(c.net_count()));
        if (c.level(n) < c.level(target)) triggers.insert(n);
      }
      TrojanInstance t;
      t.trigger_nets.assign(triggers.begin(), triggers.end());
      for (std::size_t i = 0; i < 4; ++i) t.polarities.push_back(rng.uniform(2));
      t.target_net = target;
      const auto s = splice_trojan(c, t);
      CHECK(s.circuit.gate_count() ==
            c.gate_count() + 3 + std::count(t.polarities.begin(), t.polarities.end(), 0) + 1);
      RandomVectorSource src(c.inputs().size(), trial);
      for (std::size_t j = 0; j < 1000; ++j) {
        const auto vec = src.vector(j);
        const auto vals = simulate_scalar(s.circuit, vec);
        if (vals[s.trigger_out] == 0) {
          CHECK(output_values(c, vec) == output_values(s.circuit, vec));
          ++checked;
        }
      }
    }
    CHECK(checked > 5000);
  }

  TEST_CASE("structural rules") {
    const Circuit c = test::circuit_from_verilog(test::kXorSplit);
    auto t = xor_split_trojan(c);
    CHECK_NOTHROW(check_trojan_rules(c, t));

    auto dup = t;
    dup.trigger_nets[1] = dup.trigger_nets[0];
    CHECK(kind_of([&] { check_trojan_rules(c, dup); }) == ErrorKind::RuleViolation);

    auto self = t;
    self.trigger_nets[0] = self.target_net;
    CHECK(kind_of([&] { check_trojan_rules(c, self); }) == ErrorKind::RuleViolation);

    // Target at level 1 with a level-1 trigger.
    auto level = t;
    level.trigger_nets[0] = *c.find_net("z");
    CHECK(kind_of([&] { check_trojan_rules(c, level); }) == ErrorKind::RuleViolation);
    CHECK(kind_of([&] { splice_trojan(c, level); }) == ErrorKind::RuleViolation);

    auto unknown = t;
    unknown.target_net = 999;
    CHECK(kind_of([&] { check_trojan_rules(c, unknown); }) == ErrorKind::UnknownNet);

    auto short_pol = t;
    short_pol.polarities.pop_back();
    CHECK(kind_of([&] { check_trojan_rules(c, short_pol); }) == ErrorKind::RuleViolation);
  }

  TEST_CASE("to_raw rebuilds an equivalent circuit") {
    const Circuit c = load_circuit(test::benchmark("c17"));
    const Circuit again(c.to_raw());
    CHECK(again.net_count() == c.net_count());
    for (std::uint64_t k = 0; k < 32; ++k) {
      const auto vec = test::enumerate_vector(5, k);
      CHECK(output_values(c, vec) == output_values(again, vec));
    }
  }
}
