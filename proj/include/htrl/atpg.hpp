#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/testability.hpp"

namespace htrl {

inline constexpr std::uint64_t kDefaultBacktrackLimit = 100000;

enum class AtpgOutcome { Vector, Untestable, Aborted };

struct AtpgObjective {
  NetId net;
  std::uint8_t value;
};

struct AtpgResult {
  AtpgOutcome outcome = AtpgOutcome::Untestable;
  TestVector vector;  // set for Vector outcomes, unassigned inputs filled with 0
  std::uint64_t backtracks = 0;
};

/// PODEM search over the primary inputs. Values are pairs of ternary
/// (good, faulty) values; the payload flip of a Trojan is modelled as an
/// inversion fault on the target net, which is equivalent to the spliced
/// circuit once the trigger fires.
///
/// The engine keeps scratch buffers between calls; one engine per thread.
class PodemEngine {
 public:
  explicit PodemEngine(const Circuit& circuit);
  PodemEngine(const Circuit& circuit, ScoapTable scoap);

  /// Finds a vector setting every objective net to its bit.
  AtpgResult justify(std::span<const AtpgObjective> objectives,
                     std::uint64_t limit = kDefaultBacktrackLimit);

  /// Finds a vector that fires the trigger and makes a primary output of the
  /// spliced circuit differ from the golden one. A returned vector has been
  /// re-checked by splicing and simulating both circuits.
  AtpgResult activate(const TrojanInstance& trojan, std::uint64_t limit = kDefaultBacktrackLimit);

  [[nodiscard]] const Circuit& circuit() const noexcept { return circuit_; }

 private:
  enum class Status { Continue, Success, Conflict };

  struct Decision {
    NetId pi;
    std::uint8_t value;
    bool flipped;
  };

  AtpgResult search(std::uint64_t limit);
  void reset_values();
  void assign(NetId pi, std::uint8_t value);
  void propagate();
  void evaluate_gate(GateId g, std::uint8_t& good, std::uint8_t& bad) const;
  Status check();
  bool x_path_from_target();
  AtpgObjective next_objective() const;
  std::pair<NetId, std::uint8_t> backtrace(AtpgObjective objective) const;
  [[nodiscard]] bool composite_x(NetId net) const;
  [[nodiscard]] bool carries_d(NetId net) const;

  const Circuit& circuit_;
  ScoapTable scoap_;

  std::vector<std::uint8_t> good_;
  std::vector<std::uint8_t> bad_;
  std::vector<std::vector<GateId>> buckets_;
  std::vector<std::uint8_t> queued_;
  std::vector<std::uint32_t> visit_stamp_;
  std::uint32_t stamp_ = 0;

  std::vector<AtpgObjective> objectives_;
  bool has_fault_ = false;
  NetId fault_net_ = 0;
  std::vector<GateId> cone_gates_;  // gates downstream of the fault, by level
  std::vector<NetId> cone_outputs_;
};

AtpgResult justify(const Circuit& circuit, std::span<const AtpgObjective> objectives,
                   std::uint64_t limit = kDefaultBacktrackLimit);

AtpgResult activation_vector(const Circuit& golden, const TrojanInstance& trojan,
                             std::uint64_t limit = kDefaultBacktrackLimit);

/// Independent dual-simulation check: does `vector` make some primary output
/// of the spliced circuit differ from the golden one?
bool activates(const Circuit& golden, const TrojanInstance& trojan, const TestVector& vector);

}  // namespace htrl
