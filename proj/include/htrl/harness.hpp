#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htrl/circuit.hpp"
#include "htrl/detection_env.hpp"
#include "htrl/insertion_env.hpp"
#include "htrl/netlist_io.hpp"
#include "htrl/ppo.hpp"
#include "htrl/testability.hpp"

namespace htrl {

std::string_view tool_version();

inline constexpr std::uint64_t kInsertionBaseTimesteps = 120000;
inline constexpr std::uint64_t kDetectionBaseTimesteps = 450000;
inline constexpr std::size_t kInsertionBaseEpisodeLength = 450;
inline constexpr std::size_t kDetectionEpisodeLength = 10;

/// Flat run configuration shared by every subcommand. Optional fields fall
/// back to per-subcommand defaults.
struct RunConfig {
  std::vector<std::string> circuits;
  double fraction = 0.05;
  std::optional<double> t_hts;
  std::optional<double> t_ocr;
  double theta = 0.01;
  std::size_t trigger_count = 5;
  PayloadMode payload_mode = PayloadMode::Random;
  std::string detector = "combined";
  std::optional<std::uint64_t> timesteps;
  std::optional<std::size_t> episode_length;
  double schedule_scale = 1.1;
  std::size_t schedule_rank = 0;  // position of the circuit by ascending net count
  std::uint64_t seed = 0;
  std::size_t profile_vectors = 100000;
  std::optional<std::size_t> harvest_episodes;
  std::size_t min_rare = 1;
  double cutoff_fraction = 0.1;
  bool all_positive = false;
  bool emit_netlists = true;
  double alpha = 10.0;
  std::string out = "out";
  PpoConfig ppo;

  /// Throws Usage on inconsistent settings.
  void validate() const;
  [[nodiscard]] std::string to_json() const;
};

/// Overlays the keys of a JSON object onto `cfg`. Unknown keys and wrong
/// types throw Usage.
void apply_config_json(RunConfig& cfg, std::string_view json_text);

/// Timesteps and episode lengths for the circuit at `rank`, each scaled by
/// `scale` per rank step.
std::uint64_t insertion_timesteps(std::size_t rank, double scale = 1.1);
std::size_t insertion_episode_length(std::size_t rank, double scale = 1.1);
std::uint64_t detection_timesteps(std::size_t rank, double scale = 1.1);

struct ScheduleEntry {
  std::string circuit;
  std::size_t nets = 0;
  std::uint64_t insertion_timesteps = 0;
  std::size_t insertion_episode_length = 0;
  std::uint64_t detection_timesteps = 0;
  std::size_t detection_episode_length = kDetectionEpisodeLength;
};

/// Orders circuits by net count (ties by name) and assigns scaled budgets.
std::vector<ScheduleEntry> training_schedule(
    std::vector<std::pair<std::string, std::size_t>> circuits, double scale = 1.1);

/// Static rare set from explicit thresholds, or calibrated to cfg.fraction.
struct StaticRareSelection {
  StaticRareConfig thresholds;
  RareNetSet rare;
  bool calibrated = false;
};
StaticRareSelection select_static_rare(const ScoapTable& scoap, const RunConfig& cfg);

struct InsertionRun {
  StaticRareSelection rare;
  TrainResult training;
  TrojanHarvest harvest;  // Trojans found while training, then by the trained policy
  std::size_t found_in_training = 0;
};

using CheckpointSink = std::function<void(const PolicyParams&, std::uint64_t timestep)>;

/// Seeds derived from cfg.seed, one per consumer.
struct RunSeeds {
  std::uint64_t profile;
  std::uint64_t insertion_training;
  std::uint64_t insertion_harvest;
  std::uint64_t detection_training[3];  // SSD, SAD, COD
  std::uint64_t detection_harvest[3];
  std::uint64_t random_vectors;
};
RunSeeds derive_seeds(std::uint64_t seed);

/// Trains the insertion agent and collects distinct rewarded Trojans.
InsertionRun run_insertion(const Circuit& circuit, const RunConfig& cfg,
                           const CheckpointSink& checkpoint = {});

struct DetectorRun {
  Detector detector;
  DetectorSetup setup;
  TrainResult training;
  double cutoff = 0.0;
  VectorHarvest harvest;
};

DetectorRun run_detector(const Circuit& circuit, Detector detector, const SwitchingProfile& profile,
                         const ScoapTable& scoap, const RunConfig& cfg,
                         const CheckpointSink& checkpoint = {});

/// Files written under one output directory; rollback() removes them (and
/// the directory when this writer created it).
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  void write(const std::filesystem::path& relative, std::string_view content);
  void rollback() noexcept;
  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }
  [[nodiscard]] const std::vector<std::filesystem::path>& files() const noexcept { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> created_dirs_;
  std::vector<std::filesystem::path> files_;
};

/// Reproducibility record: tool version, subcommand, argv, config echo and
/// every seed the run derives.
std::string run_record_json(std::string_view subcommand, const std::vector<std::string>& argv,
                            const RunConfig& cfg);

/// Entry point of the command-line tool. Returns 0 on success, 1 on usage
/// errors and 2 on runtime failures.
int run_cli(int argc, char** argv);

}  // namespace htrl
