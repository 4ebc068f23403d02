#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "htrl/atpg.hpp"
#include "htrl/error.hpp"
#include "htrl/evaluation.hpp"
#include "htrl/harness.hpp"
#include "htrl/logic_sim.hpp"

namespace htrl {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

// Flags shared by the subcommands; only those given on the command line
// override the config file.
struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::uint64_t timesteps = 0;
  std::size_t episode_length = 0;
  std::string payload_mode;
  std::string detector;
  double theta = 0.0;
  double fraction = 0.0;
  double t_hts = 0.0;
  double t_ocr = 0.0;
  double alpha = 0.0;
  std::string out;
  std::size_t trigger_count = 0;
  std::size_t rank = 0;
  std::size_t harvest_episodes = 0;
  std::size_t profile_vectors = 0;
  std::size_t min_rare = 0;
  double cutoff_fraction = 0.0;
  bool all_positive = false;
  bool no_netlists = false;
  std::uint64_t checkpoint_interval = 0;
  std::map<std::string, std::vector<CLI::Option*>> given;  // one per subcommand
};

void add_common(CLI::App* app, Flags& f, std::initializer_list<const char*> which) {
  auto add = [&](const char* name, auto& slot, const char* help) {
    f.given[name].push_back(app->add_option(std::string("--") + name, slot, help));
  };
  for (const char* w : which) {
    const std::string n = w;
    if (n == "config") add("config", f.config, "JSON config file; flags override its keys");
    else if (n == "seed") add("seed", f.seed, "base seed");
    else if (n == "timesteps") add("timesteps", f.timesteps, "PPO timesteps");
    else if (n == "episode-length") add("episode-length", f.episode_length, "steps per episode");
    else if (n == "payload-mode") {
      f.given[n].push_back(app->add_option("--payload-mode", f.payload_mode, "rand or high")
                               ->check(CLI::IsMember({"rand", "high"})));
    } else if (n == "detector") {
      f.given[n].push_back(app->add_option("--detector", f.detector, "ssd, sad, cod or combined")
                               ->check(CLI::IsMember({"ssd", "sad", "cod", "combined"})));
    } else if (n == "theta") add("theta", f.theta, "activity threshold of the dynamic rare set");
    else if (n == "fraction") add("fraction", f.fraction, "target rare fraction for calibration");
    else if (n == "t-hts") add("t-hts", f.t_hts, "explicit HTS threshold (with --t-ocr)");
    else if (n == "t-ocr") add("t-ocr", f.t_ocr, "explicit OCR threshold (with --t-hts)");
    else if (n == "alpha") add("alpha", f.alpha, "FN/FP undesirability ratio");
    else if (n == "out") add("out", f.out, "output directory");
    else if (n == "trigger-count") add("trigger-count", f.trigger_count, "trigger nets per Trojan");
    else if (n == "rank") add("rank", f.rank, "schedule rank of the circuit (0 = smallest)");
    else if (n == "harvest-episodes") add("harvest-episodes", f.harvest_episodes, "post-training episodes");
    else if (n == "profile-vectors") add("profile-vectors", f.profile_vectors, "random vectors for profiling");
    else if (n == "min-rare") add("min-rare", f.min_rare, "minimum rare triggers to keep a Trojan");
    else if (n == "cutoff-fraction") add("cutoff-fraction", f.cutoff_fraction, "harvest cutoff share of the last episode reward");
    else if (n == "all-positive") f.given[n].push_back(app->add_flag("--all-positive", f.all_positive, "keep every positive-reward vector"));
    else if (n == "no-netlists") f.given[n].push_back(app->add_flag("--no-netlists", f.no_netlists, "skip infected netlist emission"));
    else if (n == "checkpoint-interval") add("checkpoint-interval", f.checkpoint_interval, "timesteps between checkpoints");
  }
}

bool given(const Flags& f, const std::string& name) {
  auto it = f.given.find(name);
  if (it == f.given.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [](CLI::Option* o) { return o->count() > 0; });
}

RunConfig build_config(const Flags& f) {
  RunConfig cfg;
  if (given(f, "config")) apply_config_json(cfg, read_file(f.config));
  if (given(f, "seed")) cfg.seed = f.seed;
  if (given(f, "timesteps")) cfg.timesteps = f.timesteps;
  if (given(f, "episode-length")) cfg.episode_length = f.episode_length;
  if (given(f, "payload-mode")) cfg.payload_mode = parse_payload_mode(f.payload_mode);
  if (given(f, "detector")) cfg.detector = f.detector;
  if (given(f, "theta")) cfg.theta = f.theta;
  if (given(f, "fraction")) cfg.fraction = f.fraction;
  if (given(f, "t-hts")) cfg.t_hts = f.t_hts;
  if (given(f, "t-ocr")) cfg.t_ocr = f.t_ocr;
  if (given(f, "alpha")) cfg.alpha = f.alpha;
  if (given(f, "out")) cfg.out = f.out;
  if (given(f, "trigger-count")) cfg.trigger_count = f.trigger_count;
  if (given(f, "rank")) cfg.schedule_rank = f.rank;
  if (given(f, "harvest-episodes")) cfg.harvest_episodes = f.harvest_episodes;
  if (given(f, "profile-vectors")) cfg.profile_vectors = f.profile_vectors;
  if (given(f, "min-rare")) cfg.min_rare = f.min_rare;
  if (given(f, "cutoff-fraction")) cfg.cutoff_fraction = f.cutoff_fraction;
  if (given(f, "all-positive")) cfg.all_positive = f.all_positive;
  if (given(f, "no-netlists")) cfg.emit_netlists = !f.no_netlists;
  if (given(f, "checkpoint-interval")) cfg.ppo.checkpoint_interval = f.checkpoint_interval;
  cfg.validate();
  return cfg;
}

std::string module_stem(const Circuit& c, const std::filesystem::path& path) {
  return c.module_name().empty() ? path.stem().string() : c.module_name();
}

void cmd_analyze(const RunConfig& cfg, ArtifactWriter& w, const std::vector<std::string>& argv) {
  const Circuit c = load_circuit(cfg.circuits.at(0));
  const ScoapTable t = compute_scoap(c);
  const StaticRareSelection sel = select_static_rare(t, cfg);
  std::ostringstream csv;
  csv << std::setprecision(10);
  csv << "net,level,cc0,cc1,co,hts,ocr,rare_value,rare\n";
  for (NetId n = 0; n < c.net_count(); ++n) {
    csv << c.net_name(n) << ',' << c.level(n) << ',' << t.cc0[n] << ',' << t.cc1[n] << ',' << t.co[n]
        << ',' << t.hts(n) << ',' << t.ocr(n) << ',' << int(t.rare_value(n)) << ','
        << (sel.rare.contains(n) ? 1 : 0) << '\n';
  }
  w.write("analysis.csv", csv.str());
  w.write("run_record.json", run_record_json("analyze", argv, cfg));
  std::cout << "circuit     " << c.module_name() << '\n'
            << "inputs      " << c.inputs().size() << '\n'
            << "outputs     " << c.outputs().size() << '\n'
            << "nets        " << c.net_count() << '\n'
            << "gates       " << c.gate_count() << '\n'
            << "max level   " << c.max_level() << '\n'
            << "t_hts       " << fmt(sel.thresholds.t_hts) << '\n'
            << "t_ocr       " << fmt(sel.thresholds.t_ocr) << '\n'
            << "rare nets   " << sel.rare.size() << '\n';
}

void cmd_calibrate(const RunConfig& cfg, ArtifactWriter& w, const std::vector<std::string>& argv) {
  const Circuit c = load_circuit(cfg.circuits.at(0));
  const Calibration cal = calibrate_thresholds(c, cfg.fraction);
  nlohmann::ordered_json j;
  j["circuit"] = c.module_name();
  j["nets"] = c.net_count();
  j["target_fraction"] = cfg.fraction;
  j["t_hts"] = cal.config.t_hts;
  j["t_ocr"] = cal.config.t_ocr;
  j["selected"] = cal.selected;
  j["achieved_fraction"] = cal.achieved_fraction;
  w.write("calibration.json", j.dump(2) + "\n");
  w.write("run_record.json", run_record_json("calibrate", argv, cfg));
  std::cout << "t_hts " << fmt(cal.config.t_hts, 10) << "\nt_ocr " << fmt(cal.config.t_ocr, 10)
            << "\nselected " << cal.selected << " of " << c.net_count() << "\nachieved_fraction "
            << fmt(cal.achieved_fraction) << '\n';
}

void cmd_profile(const RunConfig& cfg, ArtifactWriter& w, const std::vector<std::string>& argv) {
  const Circuit c = load_circuit(cfg.circuits.at(0));
  const SwitchingProfile p = switching_profile(c, cfg.profile_vectors, derive_seeds(cfg.seed).profile);
  DynamicRareConfig dyn;
  dyn.theta = cfg.theta;
  const RareNetSet rare = extract_rare_dynamic(p, dyn);
  std::ostringstream csv;
  csv << std::setprecision(10);
  csv << "net,ones,prob_one,activity,rare_value,rare\n";
  double min_activity = 1.0;
  for (NetId n = 0; n < c.net_count(); ++n) {
    csv << c.net_name(n) << ',' << p.ones_count[n] << ',' << p.prob_one[n] << ',' << p.activity[n]
        << ',' << int(p.rare_value[n]) << ',' << (rare.contains(n) ? 1 : 0) << '\n';
    min_activity = std::min(min_activity, p.activity[n]);
  }
  w.write("profile.csv", csv.str());
  w.write("run_record.json", run_record_json("profile", argv, cfg));
  std::cout << "vectors " << p.total << "\nmin_activity " << fmt(min_activity)
            << "\nrare_nets " << rare.size() << " (theta " << fmt(cfg.theta) << ")\n";
}

void cmd_insert(const RunConfig& cfg, ArtifactWriter& w, const std::vector<std::string>& argv) {
  const std::filesystem::path path = cfg.circuits.at(0);
  const Circuit c = load_circuit(path);
  const InsertionRun run = run_insertion(c, cfg, [&](const PolicyParams& params, std::uint64_t t) {
    w.write("checkpoints/policy_" + std::to_string(t) + ".json", checkpoint_json(params, cfg.ppo, t));
  });
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < run.harvest.trojans.size(); ++i) {
    entries.push_back(to_manifest_entry(c, run.harvest.trojans[i], static_cast<std::uint32_t>(i),
                                        cfg.payload_mode));
  }
  w.write("manifest.json", write_manifest(entries));
  if (cfg.emit_netlists) {
    const std::string stem = module_stem(c, path);
    for (std::size_t i = 0; i < run.harvest.trojans.size(); ++i) {
      const TrojanInstance& t = run.harvest.trojans[i];
      w.write("netlists/" + stem + "_ht" + std::to_string(i) + ".v",
              emit_netlist(c, std::span<const TrojanInstance>(&t, 1)));
    }
  }
  w.write("training_curve.csv", run.training.curve.to_csv());
  const std::uint64_t steps = run.training.curve.rows.empty() ? 0 : run.training.curve.rows.back().timestep;
  w.write("policy.json", checkpoint_json(run.training.params, cfg.ppo, steps));
  w.write("run_record.json", run_record_json("insert", argv, cfg));
  const auto [first, last] = run.training.curve.decile_means();
  std::cout << "rare nets " << run.rare.rare.size() << " (t_hts " << fmt(run.rare.thresholds.t_hts)
            << ", t_ocr " << fmt(run.rare.thresholds.t_ocr) << ")\n"
            << "episodes " << run.training.curve.episodes.size() << ", reward first/last decile "
            << fmt(first) << " / " << fmt(last) << '\n'
            << "trojans " << run.harvest.trojans.size() << " (" << run.found_in_training
            << " during training)\n";
  for (const auto& [rare, count] : run.harvest.by_rare_count) {
    std::cout << "  " << rare << " rare triggers: " << count << '\n';
  }
}

void cmd_detect(const RunConfig& cfg, ArtifactWriter& w, const std::vector<std::string>& argv) {
  const Circuit c = load_circuit(cfg.circuits.at(0));
  const SwitchingProfile profile =
      switching_profile(c, cfg.profile_vectors, derive_seeds(cfg.seed).profile);
  const ScoapTable scoap = compute_scoap(c);
  std::vector<Detector> detectors;
  if (cfg.detector == "combined") detectors = {Detector::Ssd, Detector::Sad, Detector::Cod};
  else detectors = {parse_detector(cfg.detector)};
  std::vector<std::vector<TestVector>> suites;
  for (Detector d : detectors) {
    const std::string name(to_string(d));
    const DetectorRun run = run_detector(c, d, profile, scoap, cfg, [&](const PolicyParams& p, std::uint64_t t) {
      w.write("checkpoints/" + name + "_" + std::to_string(t) + ".json", checkpoint_json(p, cfg.ppo, t));
    });
    w.write("vectors_" + name + ".txt", write_vectors(run.harvest.vectors, c.inputs().size()));
    w.write("training_curve_" + name + ".csv", run.training.curve.to_csv());
    const std::uint64_t steps = run.training.curve.rows.empty() ? 0 : run.training.curve.rows.back().timestep;
    w.write("policy_" + name + ".json", checkpoint_json(run.training.params, cfg.ppo, steps));
    const auto [first, last] = run.training.curve.decile_means();
    std::cout << name << ": basis " << run.setup.basis.size() << " of " << run.setup.rare.size()
              << " rare nets, reward first/last decile " << fmt(first) << " / " << fmt(last)
              << ", cutoff " << fmt(run.cutoff) << ", vectors " << run.harvest.vectors.size()
              << " unique / " << run.harvest.raw << " raw\n";
    if (run.harvest.vectors.empty()) std::cerr << "warning: " << name << " harvested no vectors\n";
    suites.push_back(run.harvest.vectors);
  }
  if (detectors.size() > 1) {
    const auto combined = combine_suites(suites);
    w.write("vectors_combined.txt", write_vectors(combined, c.inputs().size()));
    std::cout << "combined: vectors " << combined.size() << '\n';
  }
  w.write("run_record.json", run_record_json("detect", argv, cfg));
}

struct EvaluateArgs {
  std::string manifest;
  std::vector<std::string> vectors;
  std::size_t random_vectors = 0;
  std::vector<std::string> clean;
  std::size_t interval = 2000;
};

void cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& a, ArtifactWriter& w,
                  const std::vector<std::string>& argv) {
  const Circuit c = load_circuit(cfg.circuits.at(0));
  std::vector<TrojanInstance> trojans;
  for (const auto& e : read_manifest(read_file(a.manifest))) trojans.push_back(from_manifest_entry(c, e));

  std::vector<std::pair<std::string, std::vector<TestVector>>> suites;
  for (const auto& file : a.vectors) {
    suites.emplace_back(std::filesystem::path(file).stem().string(),
                        read_vectors(read_file(file), c.inputs().size()));
  }
  if (a.random_vectors > 0) {
    RandomVectorSource src(c.inputs().size(), derive_seeds(cfg.seed).random_vectors);
    std::vector<TestVector> vs;
    for (std::size_t i = 0; i < a.random_vectors; ++i) vs.push_back(src.vector(i));
    suites.emplace_back("random", std::move(vs));
  }
  if (suites.empty()) throw Error(ErrorKind::Usage, "evaluate needs --vectors or --random-vectors");
  if (suites.size() > 1) {
    std::vector<std::vector<TestVector>> parts;
    for (const auto& [name, vs] : suites) parts.push_back(vs);
    suites.emplace_back("combined", combine_suites(parts));
  }

  std::vector<Circuit> clean;
  for (const auto& file : a.clean) clean.push_back(load_circuit(file));
  std::vector<const Circuit*> clean_ptrs{&c};  // the golden circuit is itself a clean suspect
  for (const auto& cc : clean) clean_ptrs.push_back(&cc);

  std::vector<DetectionReport> reports;
  std::cout << std::left << std::setw(16) << "suite" << std::setw(10) << "vectors" << std::setw(10)
            << "detected" << std::setw(10) << "accuracy" << std::setw(8) << "FP" << "confidence\n";
  for (const auto& [name, vs] : suites) {
    EvaluationOptions opts;
    opts.alpha = cfg.alpha;
    opts.fp_rate = false_positive_rate(c, clean_ptrs, vs);
    DetectionReport r = evaluate_detection(c, trojans, vs, opts);
    w.write("report_" + name + ".json", r.to_json());
    w.write("report_" + name + ".txt", r.to_text());
    w.write("accuracy_curve_" + name + ".csv", r.accuracy_curve_csv(a.interval));
    std::cout << std::setw(16) << name << std::setw(10) << vs.size() << std::setw(10) << r.detected
              << std::setw(10) << fmt(r.accuracy, 4) << std::setw(8) << fmt(r.fp_rate, 4)
              << fmt(r.confidence, 4) << '\n';
    reports.push_back(std::move(r));
  }
  if (a.vectors.size() + (a.random_vectors > 0 ? 1 : 0) > 1) {
    // Exclusive detections among the individual suites (the union is last).
    const auto unique = unique_contribution(std::span<const DetectionReport>(reports.data(), reports.size() - 1));
    std::cout << "exclusive detections\n";
    for (std::size_t i = 0; i < unique.size(); ++i) {
      std::cout << "  " << std::setw(14) << suites[i].first << unique[i].count << " ("
                << fmt(unique[i].percentage, 4) << "%)\n";
    }
  }
  w.write("run_record.json", run_record_json("evaluate", argv, cfg));
}

void cmd_atpg(const RunConfig& cfg, const std::vector<std::string>& objectives, std::uint64_t limit) {
  const Circuit c = load_circuit(cfg.circuits.at(0));
  std::vector<AtpgObjective> objs;
  for (const auto& o : objectives) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq + 2 != o.size() || (o[eq + 1] != '0' && o[eq + 1] != '1')) {
      throw Error(ErrorKind::Usage, "objective must look like NET=0 or NET=1: " + o);
    }
    const auto net = c.find_net(o.substr(0, eq));
    if (!net) throw Error(ErrorKind::UnknownNet, "no net named " + o.substr(0, eq));
    objs.push_back({*net, static_cast<std::uint8_t>(o[eq + 1] - '0')});
  }
  const AtpgResult r = justify(c, objs, limit);
  switch (r.outcome) {
    case AtpgOutcome::Vector: std::cout << "vector " << to_bit_string(r.vector) << '\n'; break;
    case AtpgOutcome::Untestable: std::cout << "untestable\n"; break;
    case AtpgOutcome::Aborted: std::cout << "aborted\n"; break;
  }
  std::cout << "backtracks " << r.backtracks << '\n';
}

void cmd_schedule(const RunConfig& cfg, ArtifactWriter* w, const std::vector<std::string>& argv) {
  std::vector<std::pair<std::string, std::size_t>> sizes;
  for (const auto& path : cfg.circuits) {
    const Circuit c = load_circuit(path);
    sizes.emplace_back(module_stem(c, path), c.net_count());
  }
  std::ostringstream csv;
  csv << "circuit,nets,insertion_timesteps,insertion_episode_length,detection_timesteps,"
         "detection_episode_length\n";
  for (const auto& e : training_schedule(sizes, cfg.schedule_scale)) {
    csv << e.circuit << ',' << e.nets << ',' << e.insertion_timesteps << ','
        << e.insertion_episode_length << ',' << e.detection_timesteps << ','
        << e.detection_episode_length << '\n';
  }
  std::cout << csv.str();
  if (w) {
    w->write("schedule.csv", csv.str());
    w->write("run_record.json", run_record_json("schedule", argv, cfg));
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Reinforcement-learning hardware Trojan insertion and detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));
  Flags f;
  std::vector<std::string> circuits;

  auto* analyze = app.add_subcommand("analyze", "levels, SCOAP, HTS/OCR and rare nets");
  auto* calibrate = app.add_subcommand("calibrate", "thresholds for a target rare fraction");
  auto* profile = app.add_subcommand("profile", "switching profile over random vectors");
  auto* insert = app.add_subcommand("insert", "train the insertion agent and emit Trojans");
  auto* detect = app.add_subcommand("detect", "train detection agents and harvest vectors");
  auto* evaluate = app.add_subcommand("evaluate", "apply vector suites to a Trojan population");
  auto* atpg = app.add_subcommand("atpg", "justify net objectives with PODEM");
  auto* confidence = app.add_subcommand("confidence", "confidence value of a detector");
  auto* schedule = app.add_subcommand("schedule", "scaled training budgets for a circuit list");

  for (auto* sub : {analyze, calibrate, profile, insert, detect, evaluate, atpg}) {
    sub->add_option("circuit", circuits, "netlist (.v or .bench)")->required()->expected(1);
  }
  schedule->add_option("circuits", circuits, "netlists")->required();

  add_common(analyze, f, {"config", "fraction", "t-hts", "t-ocr", "out"});
  add_common(calibrate, f, {"config", "fraction", "out"});
  add_common(profile, f, {"config", "seed", "theta", "profile-vectors", "out"});
  add_common(insert, f, {"config", "seed", "timesteps", "episode-length", "payload-mode", "fraction",
                         "t-hts", "t-ocr", "trigger-count", "rank", "harvest-episodes", "min-rare",
                         "no-netlists", "checkpoint-interval", "out"});
  add_common(detect, f, {"config", "seed", "timesteps", "episode-length", "detector", "theta",
                         "fraction", "t-hts", "t-ocr", "rank", "harvest-episodes", "profile-vectors",
                         "cutoff-fraction", "all-positive", "checkpoint-interval", "out"});
  add_common(evaluate, f, {"config", "seed", "alpha", "out"});
  add_common(schedule, f, {"config", "out"});

  EvaluateArgs ev;
  evaluate->add_option("--manifest", ev.manifest, "Trojan manifest JSON")->required();
  evaluate->add_option("--vectors", ev.vectors, "vector files (one suite each)");
  evaluate->add_option("--random-vectors", ev.random_vectors, "add a suite of N seeded random vectors");
  evaluate->add_option("--clean", ev.clean, "clean suspect netlists for FP measurement");
  evaluate->add_option("--interval", ev.interval, "accuracy-curve interval in vectors");

  std::vector<std::string> objectives;
  std::uint64_t limit = kDefaultBacktrackLimit;
  atpg->add_option("--objective", objectives, "NET=0 or NET=1, repeatable")->required();
  atpg->add_option("--backtrack-limit", limit, "abort after this many backtracks");

  double fp = 0.0;
  double fn = 0.0;
  double alpha = 10.0;
  confidence->add_option("--fp", fp, "false-positive ratio")->required();
  confidence->add_option("--fn", fn, "false-negative ratio")->required();
  confidence->add_option("--alpha", alpha, "FN/FP undesirability ratio")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::vector<std::string> args(argv, argv + argc);
  std::unique_ptr<ArtifactWriter> writer;
  try {
    if (confidence->parsed()) {
      std::cout << fmt(confidence_value(fp, fn, alpha), 10) << '\n';
      return 0;
    }
    RunConfig cfg = build_config(f);
    if (!circuits.empty()) cfg.circuits = circuits;
    if (atpg->parsed()) {
      cmd_atpg(cfg, objectives, limit);
      return 0;
    }
    writer = std::make_unique<ArtifactWriter>(cfg.out);
    if (analyze->parsed()) cmd_analyze(cfg, *writer, args);
    else if (calibrate->parsed()) cmd_calibrate(cfg, *writer, args);
    else if (profile->parsed()) cmd_profile(cfg, *writer, args);
    else if (insert->parsed()) cmd_insert(cfg, *writer, args);
    else if (detect->parsed()) cmd_detect(cfg, *writer, args);
    else if (evaluate->parsed()) cmd_evaluate(cfg, ev, *writer, args);
    else if (schedule->parsed()) cmd_schedule(cfg, given(f, "out") ? writer.get() : nullptr, args);
    return 0;
  } catch (const Error& e) {
    if (writer) writer->rollback();
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Usage ? 1 : 2;
  } catch (const std::exception& e) {
    if (writer) writer->rollback();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace htrl
