#include "toolmotion/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <json.hpp>

#include "toolmotion/error.hpp"
#include "toolmotion/parallel.hpp"

namespace toolmotion {

namespace {

using Json = nlohmann::json;

bool tip_used(const Trial& trial, Tip tip) {
  if (trial.registration_tip == tip) return true;
  return std::any_of(trial.annotations.begin(), trial.annotations.end(),
                     [&](const Annotation& a) { return a.cottle_in_use && a.active_tip == tip; });
}

std::optional<TipCalibration> resolve_calibration(const Trial& trial, Tip tip) {
  if (trial.calibration(tip)) return trial.calibration(tip);
  if (trial.pivot_interval(tip)) return calibrate_tip(trial, tip);
  if (tip_used(trial, tip)) {
    throw Error(ErrorKind::SchemaError,
                fmt::format("trial '{}': {} has neither a calibration nor a pivot interval", trial.id, to_string(tip)));
  }
  return std::nullopt;
}

HeadModeChoice resolve_mode(const Trial& trial, HeadModeChoice mode) {
  if (mode == HeadModeChoice::Auto) return trial.head_stream ? HeadModeChoice::Sensor : HeadModeChoice::Estimate;
  if (mode == HeadModeChoice::Sensor && !trial.head_stream) {
    throw Error(ErrorKind::SchemaError, fmt::format("trial '{}': sensor head mode needs head.csv", trial.id));
  }
  return mode;
}

struct Frames {
  TipTrajectories tips;  // tracker frame, or head frame in sensor mode
};

Frames trial_frames(const Trial& trial, HeadModeChoice mode, const std::optional<TipCalibration>& a,
                    const std::optional<TipCalibration>& b) {
  Frames f;
  if (a) f.tips.tip_a = tip_trajectory(trial.cottle_stream, *a);
  if (b) f.tips.tip_b = tip_trajectory(trial.cottle_stream, *b);
  if (mode == HeadModeChoice::Sensor) {
    if (a) f.tips.tip_a = to_head_frame(f.tips.tip_a, *trial.head_stream);
    if (b) f.tips.tip_b = to_head_frame(f.tips.tip_b, *trial.head_stream);
  }
  return f;
}

NoseRegistration registration_from(const Trial& trial, const TipTrajectories& tips) {
  const std::vector<Vec3> pts = points_in(tips.of(trial.registration_tip), trial.registration_interval);
  return register_nose(pts);
}

template <typename T>
void read_into(const Json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw Error(ErrorKind::SchemaError, fmt::format("config '{}' must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::SchemaError, fmt::format("unknown config key '{}{}{}'", where, where.empty() ? "" : ".", key));
    }
  }
}

}  // namespace

std::string_view to_string(HeadModeChoice m) {
  switch (m) {
    case HeadModeChoice::Auto: return "auto";
    case HeadModeChoice::Sensor: return "sensor";
    case HeadModeChoice::Estimate: return "estimate";
  }
  return "auto";
}

HeadModeChoice parse_head_mode(std::string_view s) {
  if (s == "auto") return HeadModeChoice::Auto;
  if (s == "sensor") return HeadModeChoice::Sensor;
  if (s == "estimate") return HeadModeChoice::Estimate;
  throw Error(ErrorKind::ParseError, fmt::format("unknown head mode '{}'", s));
}

void PipelineConfig::validate() const {
  strokes.validate();
  if (features.median_window < 1 || features.median_window % 2 == 0) {
    throw Error(ErrorKind::BadWindow, "features.median_window must be odd and >= 1");
  }
  if (features.min_strokes < 4) throw Error(ErrorKind::BadProfile, "features.min_strokes must be >= 4");
  if (!(head_window > 0.0)) throw Error(ErrorKind::BadWindow, "head.window must be > 0");
  if (!(head_bracket_deg > 0.0 && head_tolerance_deg > 0.0)) {
    throw Error(ErrorKind::BadProfile, "head.bracket_deg and head.tolerance_deg must be > 0");
  }
  if (!(head_contact_fraction > 0.0 && head_contact_fraction <= 1.0)) {
    throw Error(ErrorKind::BadWindow, "head.contact_fraction must be in (0, 1]");
  }
  const SvmParams& s = classifier.svm;
  if (!(s.C > 0.0) || (s.gamma && !(*s.gamma > 0.0)) || !(s.tolerance > 0.0) || s.max_iterations < 1) {
    throw Error(ErrorKind::BadProfile, "svm needs C > 0, gamma > 0, tolerance > 0, max_iterations >= 1");
  }
  const HmmParams& h = classifier.hmm;
  if (h.n_states < 1 || h.max_iterations < 1 || !(h.convergence > 0.0) || !(h.variance_floor > 0.0)) {
    throw Error(ErrorKind::BadProfile, "hmm needs states >= 1, max_iterations >= 1, convergence > 0, floor > 0");
  }
}

PipelineConfig apply_config(PipelineConfig cfg, std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("config: {}", e.what()));
  }
  try {
    check_keys(doc, {"strokes", "features", "head", "svm", "hmm", "seed"}, "");
    if (doc.contains("strokes")) {
      const Json& j = doc["strokes"];
      check_keys(j,
                 {"smooth_window", "min_duration", "max_duration", "min_length", "max_center_distance",
                  "min_prominence"},
                 "strokes");
      read_into(j, "smooth_window", cfg.strokes.smooth_window);
      read_into(j, "min_duration", cfg.strokes.min_duration);
      read_into(j, "max_duration", cfg.strokes.max_duration);
      read_into(j, "min_length", cfg.strokes.min_length);
      read_into(j, "max_center_distance", cfg.strokes.max_center_distance);
      read_into(j, "min_prominence", cfg.strokes.min_prominence);
    }
    if (doc.contains("features")) {
      const Json& j = doc["features"];
      check_keys(j, {"median_window", "min_strokes"}, "features");
      read_into(j, "median_window", cfg.features.median_window);
      read_into(j, "min_strokes", cfg.features.min_strokes);
    }
    if (doc.contains("head")) {
      const Json& j = doc["head"];
      check_keys(j, {"mode", "window", "bracket_deg", "tolerance_deg", "contact_fraction"}, "head");
      if (j.contains("mode")) cfg.head_mode = parse_head_mode(j["mode"].get<std::string>());
      read_into(j, "window", cfg.head_window);
      read_into(j, "bracket_deg", cfg.head_bracket_deg);
      read_into(j, "tolerance_deg", cfg.head_tolerance_deg);
      read_into(j, "contact_fraction", cfg.head_contact_fraction);
    }
    if (doc.contains("svm")) {
      const Json& j = doc["svm"];
      check_keys(j, {"C", "gamma", "balanced", "tolerance", "max_iterations"}, "svm");
      read_into(j, "C", cfg.classifier.svm.C);
      if (j.contains("gamma")) {
        if (j["gamma"].is_null()) cfg.classifier.svm.gamma.reset();
        else cfg.classifier.svm.gamma = j["gamma"].get<double>();
      }
      read_into(j, "balanced", cfg.classifier.svm.balanced);
      read_into(j, "tolerance", cfg.classifier.svm.tolerance);
      read_into(j, "max_iterations", cfg.classifier.svm.max_iterations);
    }
    if (doc.contains("hmm")) {
      const Json& j = doc["hmm"];
      check_keys(j, {"states", "max_iterations", "convergence", "variance_floor"}, "hmm");
      read_into(j, "states", cfg.classifier.hmm.n_states);
      read_into(j, "max_iterations", cfg.classifier.hmm.max_iterations);
      read_into(j, "convergence", cfg.classifier.hmm.convergence);
      read_into(j, "variance_floor", cfg.classifier.hmm.variance_floor);
    }
    read_into(doc, "seed", cfg.seed);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::SchemaError, fmt::format("config: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

std::string config_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["strokes"] = {{"smooth_window", cfg.strokes.smooth_window},
                  {"min_duration", cfg.strokes.min_duration},
                  {"max_duration", cfg.strokes.max_duration},
                  {"min_length", cfg.strokes.min_length},
                  {"max_center_distance", cfg.strokes.max_center_distance},
                  {"min_prominence", cfg.strokes.min_prominence}};
  j["features"] = {{"median_window", cfg.features.median_window}, {"min_strokes", cfg.features.min_strokes}};
  j["head"] = {{"mode", std::string(to_string(cfg.head_mode))},
               {"window", cfg.head_window},
               {"bracket_deg", cfg.head_bracket_deg},
               {"tolerance_deg", cfg.head_tolerance_deg},
               {"contact_fraction", cfg.head_contact_fraction}};
  const SvmParams& s = cfg.classifier.svm;
  j["svm"] = {{"C", s.C},
              {"gamma", s.gamma ? nlohmann::ordered_json(*s.gamma) : nlohmann::ordered_json(nullptr)},
              {"balanced", s.balanced},
              {"tolerance", s.tolerance},
              {"max_iterations", s.max_iterations}};
  const HmmParams& h = cfg.classifier.hmm;
  j["hmm"] = {{"states", h.n_states},
              {"max_iterations", h.max_iterations},
              {"convergence", h.convergence},
              {"variance_floor", h.variance_floor}};
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

TipCalibration calibrate_tip(const Trial& trial, Tip tip) {
  const auto& interval = trial.pivot_interval(tip);
  if (!interval) {
    throw Error(ErrorKind::SchemaError, fmt::format("trial '{}': no pivot interval for {}", trial.id, to_string(tip)));
  }
  return pivot_calibration(poses_in(trial.cottle_stream, *interval));
}

NoseRegistration register_trial(const Trial& trial, HeadModeChoice mode) {
  mode = resolve_mode(trial, mode);
  const auto cal = resolve_calibration(trial, trial.registration_tip);
  const auto a = trial.registration_tip == Tip::A ? cal : std::nullopt;
  const auto b = trial.registration_tip == Tip::B ? cal : std::nullopt;
  return registration_from(trial, trial_frames(trial, mode, a, b).tips);
}

TrialReport process_trial(const Trial& trial, const PipelineConfig& cfg) {
  try {
    TrialReport report;
    report.trial_id = trial.id;
    report.head_mode = resolve_mode(trial, cfg.head_mode);
    report.tip_a = resolve_calibration(trial, Tip::A);
    report.tip_b = resolve_calibration(trial, Tip::B);

    const Frames frames = trial_frames(trial, report.head_mode, report.tip_a, report.tip_b);
    report.registration = registration_from(trial, frames.tips);
    std::vector<SubTrial> subs = segment_subtrials(trial, frames.tips);

    if (report.head_mode == HeadModeChoice::Estimate) {
      Trajectory in_use;
      for (const SubTrial& s : subs) in_use.insert(in_use.end(), s.tip_trajectory.begin(), s.tip_trajectory.end());
      HeadModel model;
      model.mode = HeadMode::Estimated1Dof;
      model.axis = trial.head_axis ? RotationAxis{trial.head_axis->point, trial.head_axis->direction}
                                   : default_head_axis(report.registration);
      model.window = cfg.head_window;
      model.bracket_deg = cfg.head_bracket_deg;
      model.tolerance_deg = cfg.head_tolerance_deg;
      model.contact_fraction = cfg.head_contact_fraction;
      report.plane_track = estimate_plane_track(in_use, report.registration.plane, model);
      for (SubTrial& s : subs) s.tip_trajectory = compensate(s.tip_trajectory, *report.plane_track);
    }

    // strokes leave the septum on one side; orient the normal towards it
    long above = 0;
    long below = 0;
    for (const SubTrial& s : subs) {
      for (const TimedPoint& tp : s.tip_trajectory) {
        const double d = point_plane_distance(tp.p, report.registration.plane);
        if (d > 1.0) ++above;
        if (d < -1.0) ++below;
      }
    }
    if (below > above) report.registration = flipped(report.registration);

    for (SubTrial& s : subs) {
      SubtrialResult r = subtrial_features(s, report.registration, cfg.strokes, cfg.features);
      report.subtrials.push_back({std::move(s), std::move(r)});
    }

    std::vector<std::string> operators;
    for (const SubtrialOutcome& o : report.subtrials) {
      if (std::find(operators.begin(), operators.end(), o.subtrial.operator_id) == operators.end()) {
        operators.push_back(o.subtrial.operator_id);
      }
    }
    for (const std::string& op : operators) {
      DatasetRow row;
      row.trial_id = trial.id;
      row.operator_id = op;
      std::vector<FeatureVector> usable;
      for (const SubtrialOutcome& o : report.subtrials) {
        if (o.subtrial.operator_id != op) continue;
        row.label = o.subtrial.operator_class;
        if (o.result.excluded()) continue;
        usable.push_back(*o.result.features);
        ObservationSequence seq;
        for (const StrokeObservation& obs : stroke_observations(o.result)) seq.push_back({obs[0], obs[1], obs[2]});
        row.sequences.push_back(std::move(seq));
      }
      if (usable.empty()) {
        spdlog::warn("trial '{}': every sub-trial of operator '{}' has fewer than {} strokes", trial.id, op,
                     cfg.features.min_strokes);
        continue;
      }
      row.features = trial_features(usable);
      report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) throw Error(ErrorKind::AllExcluded, "every sub-trial was excluded");
    return report;
  } catch (const Error& e) {
    const std::string what = e.what();
    const std::string prefix = std::string(error_name(e.kind())) + ": ";
    throw Error(e.kind(), fmt::format("trial '{}': {}", trial.id, what.substr(prefix.size())));
  }
}

std::vector<TrialReport> process_trials(std::span<const Trial> trials, const PipelineConfig& cfg, bool skip_excluded) {
  cfg.validate();
  const std::size_t n = trials.size();
  std::vector<std::optional<TrialReport>> results(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      results[i] = process_trial(trials[i], cfg);
    } catch (const Error& e) {
      if (!skip_excluded || e.kind() != ErrorKind::AllExcluded) throw;
      spdlog::warn("{}; trial skipped", e.what());
    }
  });

  std::vector<TrialReport> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) out.push_back(std::move(*results[i]));
  }
  return out;
}

HeadEstimateCheck check_head_estimate(const Trial& trial, const PipelineConfig& cfg) {
  if (!trial.head_stream) {
    throw Error(ErrorKind::SchemaError, fmt::format("trial '{}': checking the estimator needs head.csv", trial.id));
  }
  PipelineConfig mode_cfg = cfg;
  mode_cfg.head_mode = HeadModeChoice::Sensor;
  const TrialReport sensor = process_trial(trial, mode_cfg);
  mode_cfg.head_mode = HeadModeChoice::Estimate;
  const TrialReport estimate = process_trial(trial, mode_cfg);

  HeadEstimateCheck check;
  check.trial_id = trial.id;
  const Plane& reference = sensor.registration.plane;
  for (const PlaneTrackFrame& f : estimate.plane_track->frames) {
    // three points of the estimated plane carried into the head frame at f.t
    const Vec3 n = f.plane.normal();
    const Vec3 seed = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = n.cross(seed).normalized();
    const Vec3 e2 = n.cross(e1);
    const Trajectory head = to_head_frame(
        {{f.t, f.plane.point()}, {f.t, f.plane.point() + e1}, {f.t, f.plane.point() + e2}}, *trial.head_stream);
    const Plane moved(head[0].p, (head[1].p - head[0].p).cross(head[2].p - head[0].p));
    const PlaneError err = plane_error(moved, reference, sensor.registration.nose_center);
    check.mean_angle += err.angle;
    check.mean_offset += err.offset;
    check.max_angle = std::max(check.max_angle, err.angle);
    ++check.frames;
  }
  if (check.frames) {
    check.mean_angle /= static_cast<double>(check.frames);
    check.mean_offset /= static_cast<double>(check.frames);
  }
  for (const DatasetRow& s : sensor.rows) {
    for (const DatasetRow& e : estimate.rows) {
      if (e.operator_id != s.operator_id) continue;
      const double ds = e.features.scc - s.features.scc;
      const double dd = e.features.sdc - s.features.sdc;
      const double dc = e.features.cr - s.features.cr;
      const double norm = std::sqrt(s.features.scc * s.features.scc + s.features.sdc * s.features.sdc +
                                    s.features.cr * s.features.cr);
      check.feature_change.emplace_back(s.operator_id, std::sqrt(ds * ds + dd * dd + dc * dc) / norm);
    }
  }
  return check;
}

std::string head_check_csv(std::span<const HeadEstimateCheck> checks) {
  constexpr double kToDeg = 180.0 / std::numbers::pi;
  std::string out = "trial_id,frames,mean_angle_deg,max_angle_deg,mean_offset_mm,operator_id,feature_change\n";
  for (const HeadEstimateCheck& c : checks) {
    const std::string head = fmt::format("{},{},{},{},{}", c.trial_id, c.frames, format_number(c.mean_angle * kToDeg),
                                         format_number(c.max_angle * kToDeg), format_number(c.mean_offset));
    if (c.feature_change.empty()) out += head + ",,\n";
    for (const auto& [op, change] : c.feature_change) out += fmt::format("{},{},{}\n", head, op, format_number(change));
  }
  return out;
}

Dataset build_dataset(std::span<const TrialReport> reports) {
  Dataset ds;
  for (const TrialReport& r : reports) ds.rows.insert(ds.rows.end(), r.rows.begin(), r.rows.end());
  return ds;
}

Dataset generate_dataset(const CohortSpec& spec, std::uint64_t seed, const PipelineConfig& cfg) {
  const Cohort cohort = generate_cohort(spec, seed);
  std::vector<Trial> trials;
  trials.reserve(cohort.trials.size());
  for (const GeneratedTrial& g : cohort.trials) trials.push_back(g.trial);
  const std::vector<TrialReport> reports = process_trials(trials, cfg, true);
  return build_dataset(reports);
}

}  // namespace toolmotion
