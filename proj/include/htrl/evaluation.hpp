#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htrl/circuit.hpp"

namespace htrl {

struct TrojanDetection {
  bool detected = false;
  std::optional<std::size_t> first_vector;  // index of the first mismatching vector
};

struct BucketAccuracy {
  std::size_t population = 0;
  std::size_t detected = 0;
  [[nodiscard]] double accuracy() const {
    return population == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(population);
  }
};

struct DetectionReport {
  std::vector<TrojanDetection> trojans;
  std::size_t vectors_applied = 0;
  std::size_t detected = 0;
  double accuracy = 0.0;
  double fn_rate = 0.0;
  double fp_rate = 0.0;
  double alpha = 10.0;
  double confidence = 0.0;
  std::map<std::uint32_t, BucketAccuracy> buckets;  // keyed by rare trigger count

  /// Accuracy using only the first n vectors of the suite.
  [[nodiscard]] double accuracy_at(std::size_t n) const;
  /// Rows (vectors, accuracy) every `interval` vectors up to the suite size.
  [[nodiscard]] std::string accuracy_curve_csv(std::size_t interval = 2000) const;
  [[nodiscard]] std::string to_json() const;
  [[nodiscard]] std::string to_text() const;
};

struct EvaluationOptions {
  double alpha = 10.0;
  double fp_rate = 0.0;  // measured separately on clean suspects
  std::size_t block_words = 8;
};

/// Splices each Trojan onto the golden circuit and applies the suite,
/// stopping per Trojan at the first output mismatch. Throws ManifestMismatch
/// when a Trojan does not splice, WidthMismatch on a bad vector.
DetectionReport evaluate_detection(const Circuit& golden, std::span<const TrojanInstance> trojans,
                                   std::span<const TestVector> vectors,
                                   const EvaluationOptions& opts = {});

/// Share of clean suspects flagged by the suite. Each suspect must share the
/// golden interface.
double false_positive_rate(const Circuit& golden, std::span<const Circuit* const> clean_suspects,
                           std::span<const TestVector> vectors);

/// (1 - fp) / (1/alpha + fn). Throws DomainError for alpha <= 0 or ratios
/// outside [0, 1].
double confidence_value(double fp, double fn, double alpha);

/// The FN at which a zero-FP detector's confidence drops to alpha/2.
double max_tolerable_fn(double alpha);

struct ExclusiveCount {
  std::size_t count = 0;
  double percentage = 0.0;  // of the population
};

/// Per report, Trojans detected by that report alone. Throws
/// PopulationMismatch unless all reports cover the same population size.
std::vector<ExclusiveCount> unique_contribution(std::span<const DetectionReport> reports);

/// Mean accuracy over several circuits, weighted by population and uniform.
struct AveragedAccuracy {
  double weighted = 0.0;
  double uniform = 0.0;
};
AveragedAccuracy average_accuracy(std::span<const DetectionReport> reports);

}  // namespace htrl
