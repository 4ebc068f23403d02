#include "htrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "htrl/error.hpp"
#include "htrl/rng.hpp"

#ifndef HTRL_VERSION
#define HTRL_VERSION "0.0.0"
#endif

namespace htrl {

std::string_view tool_version() { return HTRL_VERSION; }

namespace {

using Json = nlohmann::ordered_json;

Error usage(const std::string& what) { return Error(ErrorKind::Usage, what); }

std::uint64_t scaled(double base, std::size_t rank, double scale) {
  return static_cast<std::uint64_t>(std::llround(base * std::pow(scale, static_cast<double>(rank))));
}

}  // namespace

void RunConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw usage("fraction must lie in (0, 1]");
  if (t_hts.has_value() != t_ocr.has_value()) throw usage("t_hts and t_ocr must be given together");
  if (!(theta >= 0.0)) throw usage("theta must be non-negative");
  if (trigger_count == 0) throw usage("trigger_count must be positive");
  if (!(schedule_scale > 1.0) || !std::isfinite(schedule_scale)) {
    throw usage("schedule_scale must exceed 1");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw usage("alpha must be positive");
  if (detector != "ssd" && detector != "sad" && detector != "cod" && detector != "combined") {
    throw usage("detector must be one of ssd, sad, cod, combined");
  }
  if (!std::isfinite(cutoff_fraction)) throw usage("cutoff_fraction must be finite");
  if (profile_vectors == 0) throw usage("profile_vectors must be positive");
  if (episode_length && *episode_length == 0) throw usage("episode_length must be positive");
  if (timesteps && *timesteps == 0) throw usage("timesteps must be positive");
  if (out.empty()) throw usage("out must name a directory");
  try {
    ppo.validate();
  } catch (const Error& e) {
    throw usage(e.what());
  }
}

std::string RunConfig::to_json() const {
  Json j;
  j["circuits"] = circuits;
  j["fraction"] = fraction;
  j["t_hts"] = t_hts ? Json(*t_hts) : Json(nullptr);
  j["t_ocr"] = t_ocr ? Json(*t_ocr) : Json(nullptr);
  j["theta"] = theta;
  j["trigger_count"] = trigger_count;
  j["payload_mode"] = std::string(htrl::to_string(payload_mode));
  j["detector"] = detector;
  j["timesteps"] = timesteps ? Json(*timesteps) : Json(nullptr);
  j["episode_length"] = episode_length ? Json(*episode_length) : Json(nullptr);
  j["schedule_scale"] = schedule_scale;
  j["schedule_rank"] = schedule_rank;
  j["seed"] = seed;
  j["profile_vectors"] = profile_vectors;
  j["harvest_episodes"] = harvest_episodes ? Json(*harvest_episodes) : Json(nullptr);
  j["min_rare"] = min_rare;
  j["cutoff_fraction"] = cutoff_fraction;
  j["all_positive"] = all_positive;
  j["emit_netlists"] = emit_netlists;
  j["alpha"] = alpha;
  j["out"] = out;
  j["horizon"] = ppo.rollout_horizon;
  j["epochs"] = ppo.epochs;
  j["minibatch"] = ppo.minibatch;
  j["gamma"] = ppo.gamma;
  j["gae_lambda"] = ppo.gae_lambda;
  j["clip"] = ppo.clip;
  j["learning_rate"] = ppo.learning_rate;
  j["entropy_coef"] = ppo.entropy_coef;
  j["value_coef"] = ppo.value_coef;
  j["max_grad_norm"] = ppo.max_grad_norm;
  j["normalize_advantage"] = ppo.normalize_advantage;
  j["hidden"] = ppo.hidden;
  j["checkpoint_interval"] = ppo.checkpoint_interval;
  return j.dump(2);
}

void apply_config_json(RunConfig& cfg, std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw usage(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw usage("config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    try {
      auto opt_double = [&](std::optional<double>& slot) {
        if (v.is_null()) slot.reset();
        else slot = v.get<double>();
      };
      if (key == "circuits") cfg.circuits = v.get<std::vector<std::string>>();
      else if (key == "fraction") cfg.fraction = v.get<double>();
      else if (key == "t_hts") opt_double(cfg.t_hts);
      else if (key == "t_ocr") opt_double(cfg.t_ocr);
      else if (key == "theta") cfg.theta = v.get<double>();
      else if (key == "trigger_count") cfg.trigger_count = v.get<std::size_t>();
      else if (key == "payload_mode") cfg.payload_mode = parse_payload_mode(v.get<std::string>());
      else if (key == "detector") cfg.detector = v.get<std::string>();
      else if (key == "timesteps") {
        if (v.is_null()) cfg.timesteps.reset();
        else cfg.timesteps = v.get<std::uint64_t>();
      } else if (key == "episode_length") {
        if (v.is_null()) cfg.episode_length.reset();
        else cfg.episode_length = v.get<std::size_t>();
      } else if (key == "schedule_scale") cfg.schedule_scale = v.get<double>();
      else if (key == "schedule_rank") cfg.schedule_rank = v.get<std::size_t>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "profile_vectors") cfg.profile_vectors = v.get<std::size_t>();
      else if (key == "harvest_episodes") {
        if (v.is_null()) cfg.harvest_episodes.reset();
        else cfg.harvest_episodes = v.get<std::size_t>();
      } else if (key == "min_rare") cfg.min_rare = v.get<std::size_t>();
      else if (key == "cutoff_fraction") cfg.cutoff_fraction = v.get<double>();
      else if (key == "all_positive") cfg.all_positive = v.get<bool>();
      else if (key == "emit_netlists") cfg.emit_netlists = v.get<bool>();
      else if (key == "alpha") cfg.alpha = v.get<double>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "horizon") cfg.ppo.rollout_horizon = v.get<std::size_t>();
      else if (key == "epochs") cfg.ppo.epochs = v.get<std::size_t>();
      else if (key == "minibatch") cfg.ppo.minibatch = v.get<std::size_t>();
      else if (key == "gamma") cfg.ppo.gamma = v.get<double>();
      else if (key == "gae_lambda") cfg.ppo.gae_lambda = v.get<double>();
      else if (key == "clip") cfg.ppo.clip = v.get<double>();
      else if (key == "learning_rate") cfg.ppo.learning_rate = v.get<double>();
      else if (key == "entropy_coef") cfg.ppo.entropy_coef = v.get<double>();
      else if (key == "value_coef") cfg.ppo.value_coef = v.get<double>();
      else if (key == "max_grad_norm") cfg.ppo.max_grad_norm = v.get<double>();
      else if (key == "normalize_advantage") cfg.ppo.normalize_advantage = v.get<bool>();
      else if (key == "hidden") cfg.ppo.hidden = v.get<std::vector<std::size_t>>();
      else if (key == "checkpoint_interval") cfg.ppo.checkpoint_interval = v.get<std::uint64_t>();
      else throw usage("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw usage("config key '" + key + "': " + e.what());
    }
  }
}

std::uint64_t insertion_timesteps(std::size_t rank, double scale) {
  return scaled(static_cast<double>(kInsertionBaseTimesteps) / 1000.0, rank, scale) * 1000;
}

std::size_t insertion_episode_length(std::size_t rank, double scale) {
  return static_cast<std::size_t>(scaled(static_cast<double>(kInsertionBaseEpisodeLength), rank, scale));
}

std::uint64_t detection_timesteps(std::size_t rank, double scale) {
  return scaled(static_cast<double>(kDetectionBaseTimesteps) / 1000.0, rank, scale) * 1000;
}

std::vector<ScheduleEntry> training_schedule(
    std::vector<std::pair<std::string, std::size_t>> circuits, double scale) {
  std::sort(circuits.begin(), circuits.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  std::vector<ScheduleEntry> out;
  for (std::size_t rank = 0; rank < circuits.size(); ++rank) {
    ScheduleEntry e;
    e.circuit = circuits[rank].first;
    e.nets = circuits[rank].second;
    e.insertion_timesteps = insertion_timesteps(rank, scale);
    e.insertion_episode_length = insertion_episode_length(rank, scale);
    e.detection_timesteps = detection_timesteps(rank, scale);
    out.push_back(e);
  }
  return out;
}

RunSeeds derive_seeds(std::uint64_t seed) {
  // Stream s draws mix64 of (seed, s); the profile keeps the raw seed so a
  // profile run reproduces with the same number on its own.
  auto stream = [&](std::uint64_t s) { return mix64(seed ^ mix64(s)); };
  RunSeeds r{};
  r.profile = seed;
  r.insertion_training = stream(1);
  r.insertion_harvest = stream(2);
  for (std::uint64_t d = 0; d < 3; ++d) {
    r.detection_training[d] = stream(10 + d);
    r.detection_harvest[d] = stream(20 + d);
  }
  r.random_vectors = stream(30);
  return r;
}

StaticRareSelection select_static_rare(const ScoapTable& scoap, const RunConfig& cfg) {
  StaticRareSelection sel;
  if (cfg.t_hts && cfg.t_ocr) {
    sel.thresholds.t_hts = *cfg.t_hts;
    sel.thresholds.t_ocr = *cfg.t_ocr;
    sel.thresholds.target_fraction = cfg.fraction;
  } else {
    sel.thresholds = calibrate_thresholds(scoap, cfg.fraction).config;
    sel.calibrated = true;
  }
  sel.rare = extract_rare_static(scoap, sel.thresholds);
  return sel;
}

InsertionRun run_insertion(const Circuit& circuit, const RunConfig& cfg,
                           const CheckpointSink& checkpoint) {
  cfg.validate();
  const RunSeeds seeds = derive_seeds(cfg.seed);
  const ScoapTable scoap = compute_scoap(circuit);
  InsertionRun run;
  run.rare = select_static_rare(scoap, cfg);

  InsertionConfig icfg;
  icfg.trigger_count = cfg.trigger_count;
  icfg.episode_length =
      cfg.episode_length.value_or(insertion_episode_length(cfg.schedule_rank, cfg.schedule_scale));
  icfg.payload_mode = cfg.payload_mode;
  InsertionEnv env(circuit, scoap, run.rare.rare, icfg);

  PpoConfig p = cfg.ppo;
  p.total_timesteps = cfg.timesteps.value_or(insertion_timesteps(cfg.schedule_rank, cfg.schedule_scale));
  p.seed = seeds.insertion_training;
  TrainHooks hooks;
  hooks.checkpoint = checkpoint;
  // The agent inserts Trojans while it trains; every rewarded one counts.
  hooks.on_step = [&](const StepContext&) { collect_trojan(env, cfg.min_rare, run.harvest); };
  run.training = train(env, p, hooks);
  run.found_in_training = run.harvest.trojans.size();

  const std::size_t episodes = cfg.harvest_episodes.value_or(100);
  run_policy(run.training.params, env, episodes, PolicyMode::Sample, seeds.insertion_harvest,
             [&](const StepContext&) { collect_trojan(env, cfg.min_rare, run.harvest); }, false);
  return run;
}

DetectorRun run_detector(const Circuit& circuit, Detector detector, const SwitchingProfile& profile,
                         const ScoapTable& scoap, const RunConfig& cfg,
                         const CheckpointSink& checkpoint) {
  cfg.validate();
  const RunSeeds seeds = derive_seeds(cfg.seed);
  const auto d = static_cast<std::size_t>(detector);
  DetectorRun run;
  run.detector = detector;
  const StaticRareSelection sel = select_static_rare(scoap, cfg);
  run.setup = prepare_detector(circuit, detector, profile, scoap, sel.thresholds, cfg.theta);
  if (run.setup.basis.size() == 0) {
    throw Error(ErrorKind::DomainError,
                std::string("no rare nets for detector ") + std::string(to_string(detector)));
  }
  DetectionConfig dcfg;
  dcfg.detector = detector;
  dcfg.episode_length = cfg.episode_length.value_or(kDetectionEpisodeLength);
  DetectionEnv env(circuit, run.setup.basis, dcfg, run.setup.reward_inputs);

  PpoConfig p = cfg.ppo;
  p.total_timesteps = cfg.timesteps.value_or(detection_timesteps(cfg.schedule_rank, cfg.schedule_scale));
  p.seed = seeds.detection_training[d];
  TrainHooks hooks;
  hooks.checkpoint = checkpoint;
  run.training = train(env, p, hooks);
  run.cutoff = cfg.all_positive ? 0.0 : harvest_cutoff(run.training.curve, cfg.cutoff_fraction);
  run.harvest = harvest_vectors(run.training.params, env, cfg.harvest_episodes.value_or(20000),
                                run.cutoff, seeds.detection_harvest[d]);
  return run;
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

void ArtifactWriter::write(const std::filesystem::path& relative, std::string_view content) {
  const std::filesystem::path path = dir_ / relative;
  // Remember every directory level this writer creates.
  std::vector<std::filesystem::path> missing;
  for (auto p = path.parent_path(); !p.empty() && !std::filesystem::exists(p); p = p.parent_path()) {
    missing.push_back(p);
  }
  std::filesystem::create_directories(path.parent_path());
  for (auto it = missing.rbegin(); it != missing.rend(); ++it) created_dirs_.push_back(*it);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  files_.push_back(path);
  os << content;
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void ArtifactWriter::rollback() noexcept {
  std::error_code ec;
  for (const auto& f : files_) std::filesystem::remove(f, ec);
  for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it) {
    std::filesystem::remove(*it, ec);  // only succeeds when empty
  }
  files_.clear();
  created_dirs_.clear();
}

std::string run_record_json(std::string_view subcommand, const std::vector<std::string>& argv,
                            const RunConfig& cfg) {
  const RunSeeds s = derive_seeds(cfg.seed);
  Json j;
  j["tool"] = "htrl";
  j["version"] = std::string(tool_version());
  j["subcommand"] = std::string(subcommand);
  j["argv"] = argv;
  j["config"] = Json::parse(cfg.to_json());
  Json seeds;
  seeds["base"] = cfg.seed;
  seeds["profile"] = s.profile;
  seeds["insertion_training"] = s.insertion_training;
  seeds["insertion_harvest"] = s.insertion_harvest;
  const char* names[3] = {"ssd", "sad", "cod"};
  for (std::size_t d = 0; d < 3; ++d) {
    seeds[std::string(names[d]) + "_training"] = s.detection_training[d];
    seeds[std::string(names[d]) + "_harvest"] = s.detection_harvest[d];
  }
  seeds["random_vectors"] = s.random_vectors;
  j["seeds"] = seeds;
  j["threads"] = std::getenv("TP_THREADS") ? Json(std::getenv("TP_THREADS")) : Json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace htrl
