#include "htrl/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "htrl/error.hpp"
#include "htrl/logic_sim.hpp"
#include "htrl/parallel.hpp"

namespace htrl {

namespace {

void check_ratio(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::DomainError, std::string(name) + " must lie in [0, 1]");
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::DomainError, "alpha must be positive and finite");
  }
}

bool same_interface(const Circuit& a, const Circuit& b) {
  if (a.inputs().size() != b.inputs().size() || a.outputs().size() != b.outputs().size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.inputs().size(); ++i) {
    if (a.net_name(a.inputs()[i]) != b.net_name(b.inputs()[i])) return false;
  }
  for (std::size_t i = 0; i < a.outputs().size(); ++i) {
    if (a.net_name(a.outputs()[i]) != b.net_name(b.outputs()[i])) return false;
  }
  return true;
}

// Input rows packed as packed[i * words + w].
std::vector<std::uint64_t> pack_inputs(const Circuit& circuit, std::span<const TestVector> vectors,
                                       std::size_t words) {
  const std::size_t n_in = circuit.inputs().size();
  std::vector<std::uint64_t> packed(n_in * words, 0);
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].size() != n_in) {
      throw Error(ErrorKind::WidthMismatch, "vector " + std::to_string(j) + " has " +
                                                std::to_string(vectors[j].size()) + " bits, expected " +
                                                std::to_string(n_in));
    }
    for (std::size_t i = 0; i < n_in; ++i) {
      if (vectors[j][i]) packed[i * words + j / 64] |= 1ULL << (j % 64);
    }
  }
  return packed;
}

// Output rows of `circuit` over words [first, first + width), out[k * width + w].
void output_block(const Circuit& circuit, std::span<const std::uint64_t> packed, std::size_t words,
                  std::size_t first, std::size_t width, std::vector<std::uint64_t>& values,
                  std::vector<std::uint64_t>& out) {
  values.assign(circuit.net_count() * width, 0);
  const auto pis = circuit.inputs();
  for (std::size_t i = 0; i < pis.size(); ++i) {
    std::copy_n(packed.begin() + static_cast<std::ptrdiff_t>(i * words + first), width,
                values.begin() + static_cast<std::ptrdiff_t>(pis[i] * width));
  }
  simulate_words(circuit, values, width);
  const auto pos = circuit.outputs();
  out.resize(pos.size() * width);
  for (std::size_t k = 0; k < pos.size(); ++k) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos[k] * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(k * width));
  }
}

// First vector index in [0, n) where the two circuits' outputs differ.
std::optional<std::size_t> first_mismatch(const Circuit& golden, const Circuit& suspect,
                                          std::span<const std::uint64_t> packed, std::size_t n,
                                          std::size_t block_words) {
  const std::size_t words = (n + 63) / 64;
  const std::size_t n_out = golden.outputs().size();
  std::vector<std::uint64_t> values;
  std::vector<std::uint64_t> good;
  std::vector<std::uint64_t> bad;
  for (std::size_t first = 0; first < words; first += block_words) {
    const std::size_t width = std::min(block_words, words - first);
    output_block(golden, packed, words, first, width, values, good);
    output_block(suspect, packed, words, first, width, values, bad);
    for (std::size_t w = 0; w < width; ++w) {
      std::uint64_t diff = 0;
      for (std::size_t k = 0; k < n_out; ++k) diff |= good[k * width + w] ^ bad[k * width + w];
      if (first + w == words - 1 && n % 64 != 0) diff &= (1ULL << (n % 64)) - 1;
      if (diff != 0) return (first + w) * 64 + static_cast<std::size_t>(std::countr_zero(diff));
    }
  }
  return std::nullopt;
}

}  // namespace

double DetectionReport::accuracy_at(std::size_t n) const {
  if (trojans.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& t : trojans) {
    if (t.first_vector && *t.first_vector < n) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(trojans.size());
}

std::string DetectionReport::accuracy_curve_csv(std::size_t interval) const {
  if (interval == 0) throw Error(ErrorKind::DomainError, "curve interval must be positive");
  std::ostringstream os;
  os << "vectors,accuracy\n";
  os << std::setprecision(10);
  for (std::size_t n = interval;; n += interval) {
    const std::size_t at = std::min(n, vectors_applied);
    os << at << ',' << accuracy_at(at) << '\n';
    if (n >= vectors_applied) break;
  }
  return os.str();
}

std::string DetectionReport::to_json() const {
  nlohmann::ordered_json j;
  j["population"] = trojans.size();
  j["detected"] = detected;
  j["vectors_applied"] = vectors_applied;
  j["accuracy"] = accuracy;
  j["fn_rate"] = fn_rate;
  j["fp_rate"] = fp_rate;
  j["alpha"] = alpha;
  j["confidence"] = confidence;
  nlohmann::ordered_json b = nlohmann::ordered_json::object();
  for (const auto& [rare, acc] : buckets) {
    b[std::to_string(rare)] = {{"population", acc.population},
                               {"detected", acc.detected},
                               {"accuracy", acc.accuracy()}};
  }
  j["buckets"] = b;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& t : trojans) {
    nlohmann::ordered_json e;
    e["detected"] = t.detected;
    e["first_vector"] = t.first_vector ? nlohmann::ordered_json(*t.first_vector) : nullptr;
    list.push_back(e);
  }
  j["trojans"] = list;
  return j.dump(2) + "\n";
}

std::string DetectionReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "population  " << trojans.size() << '\n';
  os << "vectors     " << vectors_applied << '\n';
  os << "detected    " << detected << '\n';
  os << "accuracy    " << accuracy << '\n';
  os << "FN          " << fn_rate << '\n';
  os << "FP          " << fp_rate << '\n';
  os << "confidence  " << confidence << "  (alpha " << alpha << ")\n";
  os << "rare  population  detected  accuracy\n";
  for (const auto& [rare, acc] : buckets) {
    os << std::setw(4) << rare << std::setw(12) << acc.population << std::setw(10) << acc.detected
       << std::setw(10) << acc.accuracy() << '\n';
  }
  return os.str();
}

DetectionReport evaluate_detection(const Circuit& golden, std::span<const TrojanInstance> trojans,
                                   std::span<const TestVector> vectors,
                                   const EvaluationOptions& opts) {
  check_alpha(opts.alpha);
  check_ratio(opts.fp_rate, "fp rate");
  if (opts.block_words == 0) throw Error(ErrorKind::DomainError, "block size must be positive");
  for (std::size_t i = 0; i < trojans.size(); ++i) {
    try {
      check_trojan_rules(golden, trojans[i]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ManifestMismatch, "trojan " + std::to_string(i) + ": " + e.what());
    }
  }
  const std::size_t words = (vectors.size() + 63) / 64;
  const auto packed = pack_inputs(golden, vectors, words);

  DetectionReport report;
  report.vectors_applied = vectors.size();
  report.trojans.resize(trojans.size());
  parallel_for(trojans.size(), [&](std::size_t i) {
    const SplicedCircuit spliced = splice_trojan(golden, trojans[i]);
    auto first = first_mismatch(golden, spliced.circuit, packed, vectors.size(), opts.block_words);
    report.trojans[i] = TrojanDetection{first.has_value(), first};
  });

  for (std::size_t i = 0; i < trojans.size(); ++i) {
    auto& bucket = report.buckets[trojans[i].rare_trigger_count];
    ++bucket.population;
    if (report.trojans[i].detected) {
      ++bucket.detected;
      ++report.detected;
    }
  }
  report.accuracy = trojans.empty()
                        ? 0.0
                        : static_cast<double>(report.detected) / static_cast<double>(trojans.size());
  report.fn_rate = trojans.empty() ? 0.0 : 1.0 - report.accuracy;
  report.fp_rate = opts.fp_rate;
  report.alpha = opts.alpha;
  report.confidence = confidence_value(report.fp_rate, report.fn_rate, report.alpha);
  return report;
}

double false_positive_rate(const Circuit& golden, std::span<const Circuit* const> clean_suspects,
                           std::span<const TestVector> vectors) {
  if (clean_suspects.empty()) return 0.0;
  const std::size_t words = (vectors.size() + 63) / 64;
  const auto packed = pack_inputs(golden, vectors, words);
  std::size_t flagged = 0;
  for (const Circuit* suspect : clean_suspects) {
    if (!same_interface(golden, *suspect)) {
      throw Error(ErrorKind::InterfaceMismatch, "suspect ports differ from the golden circuit");
    }
    if (first_mismatch(golden, *suspect, packed, vectors.size(), 8)) ++flagged;
  }
  return static_cast<double>(flagged) / static_cast<double>(clean_suspects.size());
}

double confidence_value(double fp, double fn, double alpha) {
  check_alpha(alpha);
  check_ratio(fp, "fp");
  check_ratio(fn, "fn");
  return (1.0 - fp) / (1.0 / alpha + fn);
}

double max_tolerable_fn(double alpha) {
  check_alpha(alpha);
  return 1.0 / alpha;
}

std::vector<ExclusiveCount> unique_contribution(std::span<const DetectionReport> reports) {
  std::vector<ExclusiveCount> out(reports.size());
  if (reports.empty()) return out;
  const std::size_t pop = reports.front().trojans.size();
  for (const auto& r : reports) {
    if (r.trojans.size() != pop) {
      throw Error(ErrorKind::PopulationMismatch, "reports cover populations of different sizes");
    }
  }
  for (std::size_t j = 0; j < pop; ++j) {
    std::size_t hits = 0;
    std::size_t who = 0;
    for (std::size_t r = 0; r < reports.size(); ++r) {
      if (reports[r].trojans[j].detected) {
        ++hits;
        who = r;
      }
    }
    if (hits == 1) ++out[who].count;
  }
  for (auto& e : out) {
    e.percentage = pop == 0 ? 0.0 : 100.0 * static_cast<double>(e.count) / static_cast<double>(pop);
  }
  return out;
}

AveragedAccuracy average_accuracy(std::span<const DetectionReport> reports) {
  AveragedAccuracy avg;
  if (reports.empty()) return avg;
  std::size_t pop = 0;
  std::size_t det = 0;
  double sum = 0.0;
  for (const auto& r : reports) {
    pop += r.trojans.size();
    det += r.detected;
    sum += r.accuracy;
  }
  avg.weighted = pop == 0 ? 0.0 : static_cast<double>(det) / static_cast<double>(pop);
  avg.uniform = sum / static_cast<double>(reports.size());
  return avg;
}

}  // namespace htrl
