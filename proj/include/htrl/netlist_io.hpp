#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/netlist.hpp"

namespace htrl {

enum class NetlistFormat { StructuralVerilog, Bench };

/// `.bench` selects Bench; everything else is read as structural Verilog.
NetlistFormat format_from_path(const std::filesystem::path& path);

/// Parses a flattened combinational netlist. `module_name` names bench
/// netlists, which carry no module header.
RawNetlist parse_netlist(std::string_view text, NetlistFormat format,
                         std::string_view module_name = "top");

RawNetlist read_netlist_file(const std::filesystem::path& path);
Circuit load_circuit(const std::filesystem::path& path);

/// Structural Verilog for `circuit` with every Trojan in `trojans` spliced in
/// (net IDs refer to `circuit`). An empty list reproduces the circuit.
std::string emit_netlist(const Circuit& circuit, std::span<const TrojanInstance> trojans = {});

/// Structural Verilog text for an arbitrary raw netlist.
std::string write_verilog(const RawNetlist& netlist);

// Test-vector files: one row per vector, '0'/'1' in declared input order.
std::vector<TestVector> read_vectors(std::string_view text, std::size_t width);
std::string write_vectors(std::span<const TestVector> vectors, std::size_t width);
std::string to_bit_string(const TestVector& vector);
TestVector from_bit_string(std::string_view bits);

enum class PayloadMode { Random, High };
std::string_view to_string(PayloadMode mode);
PayloadMode parse_payload_mode(std::string_view text);

/// One Trojan as recorded in a population manifest (names, not IDs).
struct ManifestEntry {
  std::uint32_t id = 0;
  std::vector<std::string> trigger_nets;
  std::vector<std::uint8_t> polarities;
  std::string target_net;
  std::uint32_t rare_trigger_count = 0;
  std::string activation_vector;  // bit string, empty if none
  PayloadMode payload_mode = PayloadMode::Random;

  bool operator==(const ManifestEntry&) const = default;
};

ManifestEntry to_manifest_entry(const Circuit& circuit, const TrojanInstance& trojan,
                                std::uint32_t id, PayloadMode mode);
/// Resolves names against `circuit`; throws ManifestMismatch on unknown nets,
/// bad vector widths, or rule violations.
TrojanInstance from_manifest_entry(const Circuit& circuit, const ManifestEntry& entry);

std::string write_manifest(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(std::string_view json_text);

}  // namespace htrl
