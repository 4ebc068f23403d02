#pragma once

// Test-only helpers: random circuit generation and brute-force reference
// models that share no code with the library's simulator or ATPG.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/netlist.hpp"
#include "htrl/rng.hpp"

namespace htrl::test {

struct RandomCircuitShape {
  std::size_t inputs = 8;
  std::size_t gates = 40;
  std::size_t outputs = 4;
  std::size_t max_fanin = 3;
};

/// Random DAG over the eight basic kinds. Outputs are drawn from the last
/// gates so most logic is observable.
RawNetlist random_netlist(Rng& rng, const RandomCircuitShape& shape);

/// Name-keyed recursive evaluation straight from the raw gate list.
/// `overrides` forces named nets to fixed values.
std::map<std::string, std::uint8_t> reference_eval(
    const RawNetlist& netlist, const std::vector<std::uint8_t>& inputs,
    const std::map<std::string, std::uint8_t>& overrides = {});

std::vector<std::uint8_t> reference_outputs(const RawNetlist& netlist,
                                            const std::vector<std::uint8_t>& inputs,
                                            const std::map<std::string, std::uint8_t>& overrides = {});

/// Input vector number `k` of an exhaustive sweep (input i = bit i of k).
std::vector<std::uint8_t> enumerate_vector(std::size_t width, std::uint64_t k);

/// Does any input assignment meet every (net, value) objective?
bool exhaustive_satisfiable(const RawNetlist& netlist,
                            const std::vector<std::pair<std::string, std::uint8_t>>& objectives);

/// Does any input assignment fire the trigger and flip an output when the
/// target is inverted? The flip is modelled by overriding the target net.
bool exhaustive_activatable(const RawNetlist& netlist, const std::vector<std::string>& triggers,
                            const std::vector<std::uint8_t>& polarities, const std::string& target);

/// Parses a Verilog snippet into a circuit.
Circuit circuit_from_verilog(const std::string& text);

/// Path of a bundled benchmark netlist.
std::filesystem::path benchmark(const std::string& name);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace htrl::test
