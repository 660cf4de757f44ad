#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolmotion/classify.hpp"
#include "toolmotion/error.hpp"
#include "toolmotion/features.hpp"
#include "toolmotion/parallel.hpp"
#include "toolmotion/pipeline.hpp"
#include "toolmotion/report.hpp"
#include "toolmotion/synth.hpp"
#include "toolmotion/tables.hpp"

namespace fs = std::filesystem;
using namespace toolmotion;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string head_mode;
  std::string config_path;
  bool verbose = false;
};

// Defaults, then flags, then the config file.
PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (g.seed) cfg.seed = *g.seed;
  if (!g.head_mode.empty()) cfg.head_mode = parse_head_mode(g.head_mode);
  if (!g.config_path.empty()) cfg = apply_config(cfg, read_text(g.config_path));
  cfg.validate();
  return cfg;
}

std::vector<Trial> load_bundles(const std::vector<std::string>& dirs) {
  std::vector<Trial> trials(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) { trials[i] = parse_trial(dirs[i]); });
  return trials;
}

std::set<Tip> tips_in_use(const Trial& trial) {
  std::set<Tip> tips{trial.registration_tip};
  for (const Annotation& a : trial.annotations) {
    if (a.cottle_in_use) tips.insert(a.active_tip);
  }
  return tips;
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

// ---------------------------------------------------------------------------

struct CalibrateOptions {
  std::vector<std::string> bundles;
};

int run_calibrate(const CalibrateOptions& o) {
  const std::vector<Trial> trials = load_bundles(o.bundles);
  std::vector<std::map<Tip, TipCalibration>> cals(trials.size());
  parallel_for(trials.size(), [&](std::size_t i) {
    for (Tip tip : tips_in_use(trials[i])) {
      try {
        cals[i][tip] = calibrate_tip(trials[i], tip);
      } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("trial '{}': {}", trials[i].id, e.what()));
      }
    }
  });
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const fs::path meta_path = fs::path(o.bundles[i]) / "meta.json";
    nlohmann::ordered_json meta = nlohmann::ordered_json::parse(read_text(meta_path));
    nlohmann::ordered_json& out = meta["calibrations"];
    if (!out.is_object()) out = nlohmann::ordered_json::object();
    for (const auto& [tip, cal] : cals[i]) {
      out[std::string(to_string(tip))] = {{"offset", vec_json(cal.tip_offset)}, {"residual_rms", cal.residual_rms}};
      std::cout << fmt::format("{} {} offset=({}, {}, {}) residual_rms={}\n", trials[i].id, to_string(tip),
                               format_number(cal.tip_offset.x), format_number(cal.tip_offset.y),
                               format_number(cal.tip_offset.z), format_number(cal.residual_rms));
    }
    write_text(meta_path, meta.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct RegisterOptions {
  std::vector<std::string> bundles;
  std::string out = "registration.json";
};

int run_register(const RegisterOptions& o, const PipelineConfig& cfg) {
  const std::vector<Trial> trials = load_bundles(o.bundles);
  std::vector<NoseRegistration> regs(trials.size());
  parallel_for(trials.size(), [&](std::size_t i) {
    try {
      regs[i] = register_trial(trials[i], cfg.head_mode);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("trial '{}': {}", trials[i].id, e.what()));
    }
  });
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const NoseRegistration& r = regs[i];
    doc.push_back({{"trial_id", trials[i].id},
                   {"plane_point", vec_json(r.plane.point())},
                   {"plane_normal", vec_json(r.plane.normal())},
                   {"basis_u", vec_json(r.basis.u)},
                   {"basis_v", vec_json(r.basis.v)},
                   {"nose_center", vec_json(r.nose_center)}});
  }
  write_text(o.out, doc.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct FeaturesOptions {
  std::vector<std::string> bundles;
  std::string out_dir = ".";
  bool skip_excluded = false;
  bool head_check = false;
};

int run_features(const FeaturesOptions& o, const PipelineConfig& cfg) {
  const std::vector<Trial> trials = load_bundles(o.bundles);
  const std::vector<TrialReport> reports = process_trials(trials, cfg, o.skip_excluded);
  if (reports.empty()) throw Error(ErrorKind::AllExcluded, "no trial produced a usable sub-trial");
  const fs::path dir = o.out_dir;
  write_text(dir / "features.csv", features_csv(reports));
  write_text(dir / "subtrial_features.csv", subtrial_features_csv(reports));
  write_text(dir / "strokes.csv", strokes_csv(reports));
  if (o.head_check) {
    std::vector<std::optional<HeadEstimateCheck>> checks(trials.size());
    parallel_for(trials.size(), [&](std::size_t i) {
      if (!trials[i].head_stream) return;
      try {
        checks[i] = check_head_estimate(trials[i], cfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::AllExcluded) throw;
        spdlog::warn("{}; no estimator check", e.what());
      }
    });
    std::vector<HeadEstimateCheck> kept;
    for (auto& c : checks) {
      if (c) kept.push_back(std::move(*c));
    }
    write_text(dir / "head_check.csv", head_check_csv(kept));
  }
  spdlog::info("{} trials, {} rows", reports.size(), build_dataset(reports).rows.size());
  return 0;
}

// ---------------------------------------------------------------------------

struct ClassifyOptions {
  std::string features;
  std::string strokes;
  std::vector<std::string> bundles;
  std::string scheme = "TO";
  std::string classifier = "svm";
  std::vector<std::string> columns;
  std::string out = "report.json";
};

int run_classify(const ClassifyOptions& o, const PipelineConfig& cfg) {
  const ClassifierKind kind = parse_classifier(o.classifier);
  const Scheme scheme = parse_scheme(o.scheme);
  Dataset ds;
  if (!o.bundles.empty()) {
    const std::vector<Trial> trials = load_bundles(o.bundles);
    ds = build_dataset(process_trials(trials, cfg, true));
  } else if (!o.features.empty()) {
    ds = parse_features_csv(read_text(o.features));
    if (!o.strokes.empty()) {
      attach_sequences(ds, parse_strokes_csv(read_text(o.strokes)));
    } else if (kind == ClassifierKind::Hmm) {
      throw Error(ErrorKind::SchemaError, "the hmm classifier needs --strokes");
    }
  } else {
    throw Error(ErrorKind::SchemaError, "give --features or --bundles");
  }
  write_text(o.out, classification_report(ds, scheme, kind, cfg.classifier, o.columns));
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string out_dir = "cohort";
  CohortSpec spec;
  bool same_profile = false;
};

int run_simulate(SimulateOptions o, const PipelineConfig& cfg) {
  if (o.same_profile) o.spec.novice = o.spec.expert;
  const Cohort cohort = generate_cohort(o.spec, cfg.seed);
  const fs::path dir = o.out_dir;
  parallel_for(cohort.trials.size(), [&](std::size_t i) {
    const GeneratedTrial& g = cohort.trials[i];
    write_trial(g.trial, dir / g.trial.id);
    write_truth(g.truth, dir / g.trial.id);
  });
  nlohmann::ordered_json ops = nlohmann::ordered_json::array();
  for (const SynthOperator& op : cohort.operators) {
    ops.push_back({{"id", op.id}, {"class", std::string(to_string(op.skill))}});
  }
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const GeneratedTrial& g : cohort.trials) trials.push_back(g.trial.id);
  const nlohmann::ordered_json doc = {{"seed", cfg.seed}, {"operators", ops}, {"trials", trials}};
  write_text(dir / "cohort.json", doc.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportOptions {
  std::string strokes;
  std::string bundle;
  std::string trial;
  int subtrial = 0;
  std::string out_dir = ".";
};

SearchGraph graph_from_records(const std::vector<StrokeRecord>& records, const std::string& trial, int subtrial) {
  std::vector<Vec2> vertices;
  std::vector<double> lengths;
  for (const StrokeRecord& r : records) {
    if (r.trial_id != trial || r.subtrial != subtrial) continue;
    vertices.push_back(r.start);
    lengths.push_back(r.path_length);
  }
  if (vertices.empty()) {
    throw Error(ErrorKind::SchemaError, fmt::format("no strokes for trial '{}' sub-trial {}", trial, subtrial));
  }
  return build_search_graph(vertices, lengths);
}

int run_report(const ReportOptions& o, const PipelineConfig& cfg) {
  std::vector<StrokeRecord> records;
  if (!o.bundle.empty()) {
    const std::vector<Trial> trials = load_bundles({o.bundle});
    const std::vector<TrialReport> reports = process_trials(trials, cfg, false);
    records = parse_strokes_csv(strokes_csv(reports));
  } else if (!o.strokes.empty()) {
    records = parse_strokes_csv(read_text(o.strokes));
  } else {
    throw Error(ErrorKind::SchemaError, "give --strokes or --bundle");
  }
  std::string trial = o.trial;
  if (trial.empty()) {
    if (records.empty()) throw Error(ErrorKind::SchemaError, "no strokes to report");
    trial = records.front().trial_id;
  }
  const SearchGraph g = graph_from_records(records, trial, o.subtrial);
  const std::string title = fmt::format("{} sub-trial {}", trial, o.subtrial);
  const fs::path dir = o.out_dir;
  write_text(dir / "search_graph.svg", search_graph_svg(g, title));
  write_text(dir / "cumulative_area.csv", cumulative_area_csv(g));
  write_text(dir / "cumulative_area.svg", cumulative_area_svg(g, title));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("toolmotion");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Tool-motion skill analysis: calibration, stroke features and classification."};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--head-mode", g.head_mode, "auto, sensor or estimate")
      ->check(CLI::IsMember({"auto", "sensor", "estimate"}));
  app.add_option("--config", g.config_path, "JSON config; its values override flags")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");

  CalibrateOptions cal;
  auto* cmd_cal = app.add_subcommand("calibrate", "Pivot-calibrate the tips in use and store offsets in meta.json");
  cmd_cal->add_option("bundles", cal.bundles, "Trial bundle directories")->required()->check(CLI::ExistingDirectory);

  RegisterOptions reg;
  auto* cmd_reg = app.add_subcommand("register", "Estimate the septal plane of each bundle");
  cmd_reg->add_option("bundles", reg.bundles, "Trial bundle directories")->required()->check(CLI::ExistingDirectory);
  cmd_reg->add_option("-o,--out", reg.out, "Output JSON file");

  FeaturesOptions feat;
  auto* cmd_feat = app.add_subcommand("features", "Detect strokes and write features.csv and strokes.csv");
  cmd_feat->add_option("bundles", feat.bundles, "Trial bundle directories")->required()->check(CLI::ExistingDirectory);
  cmd_feat->add_option("-o,--out", feat.out_dir, "Output directory");
  cmd_feat->add_flag("--skip-excluded", feat.skip_excluded, "Drop trials without a usable sub-trial");
  cmd_feat->add_flag("--head-check", feat.head_check,
                     "Also score the head-motion estimator against head.csv into head_check.csv");

  ClassifyOptions cls;
  auto* cmd_cls = app.add_subcommand("classify", "Cross-validated expert/novice classification report");
  cmd_cls->add_option("--features", cls.features, "features.csv")->check(CLI::ExistingFile);
  cmd_cls->add_option("--strokes", cls.strokes, "strokes.csv (needed by the hmm classifier)")->check(CLI::ExistingFile);
  cmd_cls->add_option("--bundles", cls.bundles, "Trial bundles processed in place of --features")
      ->check(CLI::ExistingDirectory);
  cmd_cls->add_option("--scheme", cls.scheme, "TO (leave one trial out) or UO (leave one operator out)")
      ->check(CLI::IsMember({"TO", "UO", "to", "uo"}));
  cmd_cls->add_option("--classifier", cls.classifier, "svm or hmm")->check(CLI::IsMember({"svm", "hmm"}));
  cmd_cls->add_option("--columns", cls.columns, "Subset of scc, sdc, cr, overall")
      ->delimiter(',')
      ->check(CLI::IsMember({"scc", "sdc", "cr", "overall"}));
  cmd_cls->add_option("-o,--out", cls.out, "Output JSON file");

  SimulateOptions sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Write a synthetic cohort of trial bundles with truth.json");
  cmd_sim->add_option("-o,--out", sim.out_dir, "Output directory");
  cmd_sim->add_option("--experts", sim.spec.n_experts, "Expert operators")->check(CLI::PositiveNumber);
  cmd_sim->add_option("--novices", sim.spec.n_novices, "Novice operators")->check(CLI::PositiveNumber);
  cmd_sim->add_option("--expert-trials", sim.spec.expert_trials, "Single-expert trials")->check(CLI::NonNegativeNumber);
  cmd_sim->add_option("--novice-trials", sim.spec.novice_trials, "Single-novice trials")->check(CLI::NonNegativeNumber);
  cmd_sim->add_option("--shared-trials", sim.spec.shared_trials, "Expert plus novice trials")
      ->check(CLI::NonNegativeNumber);
  cmd_sim->add_option("--head-amplitude", sim.spec.head.amplitude_deg, "Head rotation amplitude, degrees");
  cmd_sim->add_option("--head-frequency", sim.spec.head.frequency_hz, "Head rotation frequency, Hz");
  cmd_sim->add_flag("!--no-head-sensor", sim.spec.head_sensor, "Omit head.csv");
  cmd_sim->add_option("--rate", sim.spec.rate, "Sampling rate, Hz")->check(CLI::PositiveNumber);
  cmd_sim->add_flag("--same-profile", sim.same_profile, "Novices use the expert profile");

  ReportOptions rep;
  auto* cmd_rep = app.add_subcommand("report", "Search graph and cumulative hull area figures for one sub-trial");
  cmd_rep->add_option("--strokes", rep.strokes, "strokes.csv")->check(CLI::ExistingFile);
  cmd_rep->add_option("--bundle", rep.bundle, "Trial bundle processed in place of --strokes")
      ->check(CLI::ExistingDirectory);
  cmd_rep->add_option("--trial", rep.trial, "Trial id (default: first in the file)");
  cmd_rep->add_option("--subtrial", rep.subtrial, "Sub-trial index")->check(CLI::NonNegativeNumber);
  cmd_rep->add_option("-o,--out", rep.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (g.verbose) spdlog::set_level(spdlog::level::info);

  try {
    const PipelineConfig cfg = resolve_config(g);
    if (*cmd_cal) return run_calibrate(cal);
    if (*cmd_reg) return run_register(reg, cfg);
    if (*cmd_feat) return run_features(feat, cfg);
    if (*cmd_cls) return run_classify(cls, cfg);
    if (*cmd_sim) return run_simulate(sim, cfg);
    if (*cmd_rep) return run_report(rep, cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: ParseError: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: SchemaError: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
