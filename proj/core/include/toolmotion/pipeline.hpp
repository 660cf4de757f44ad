#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/classify.hpp"
#include "toolmotion/features.hpp"
#include "toolmotion/headcomp.hpp"
#include "toolmotion/strokes.hpp"
#include "toolmotion/synth.hpp"

namespace toolmotion {

enum class HeadModeChoice { Auto, Sensor, Estimate };

std::string_view to_string(HeadModeChoice m);
HeadModeChoice parse_head_mode(std::string_view s);

struct PipelineConfig {
  StrokeConfig strokes;
  FeatureConfig features;
  HeadModeChoice head_mode = HeadModeChoice::Auto;
  double head_window = 2.0;
  double head_bracket_deg = 15.0;
  double head_tolerance_deg = 0.01;
  double head_contact_fraction = 0.1;  ///< strokes lift the tip; fit the contact envelope
  ClassifierConfig classifier;
  std::uint64_t seed = 0;

  /// Throws BadWindow / BadProfile / SchemaError on values no module accepts.
  void validate() const;
};

/// Overrides the fields present in a JSON config document; unknown keys are a SchemaError.
PipelineConfig apply_config(PipelineConfig base, std::string_view json_text);

/// Full config as JSON, every field present.
std::string config_json(const PipelineConfig& cfg);

struct SubtrialOutcome {
  SubTrial subtrial;
  SubtrialResult result;
};

struct TrialReport {
  std::string trial_id;
  HeadModeChoice head_mode = HeadModeChoice::Sensor;  ///< mode actually used
  NoseRegistration registration;
  std::optional<TipCalibration> tip_a;
  std::optional<TipCalibration> tip_b;
  std::optional<PlaneTrack> plane_track;  ///< estimated mode only
  std::vector<SubtrialOutcome> subtrials;
  std::vector<DatasetRow> rows;  ///< one per operator with at least one usable sub-trial
};

/// Calibrates (stored offsets win over pivot intervals), registers, compensates head
/// motion, detects strokes and computes features. Throws AllExcluded when no
/// operator keeps a usable sub-trial.
TrialReport process_trial(const Trial& trial, const PipelineConfig& cfg);

/// Parallel over trials; results keep input order. With `skip_excluded`, trials that
/// throw AllExcluded are dropped with a warning.
std::vector<TrialReport> process_trials(std::span<const Trial> trials, const PipelineConfig& cfg,
                                        bool skip_excluded = false);

/// Tip calibration from a bundle: stored offsets are not consulted.
TipCalibration calibrate_tip(const Trial& trial, Tip tip);

/// Registration in the frame used by `mode` (Auto resolves by head stream presence).
NoseRegistration register_trial(const Trial& trial, HeadModeChoice mode);

/// Estimated plane track scored against the head sensor of the same trial.
struct HeadEstimateCheck {
  std::string trial_id;
  std::size_t frames = 0;
  double mean_angle = 0.0;   ///< radians
  double max_angle = 0.0;    ///< radians
  double mean_offset = 0.0;  ///< mm, at the nose center
  /// Per operator present in both modes: |f_estimate - f_sensor| / |f_sensor| over (scc, sdc, cr).
  std::vector<std::pair<std::string, double>> feature_change;
};

/// Runs the trial in sensor and in estimate mode. Throws SchemaError without a head stream.
HeadEstimateCheck check_head_estimate(const Trial& trial, const PipelineConfig& cfg);

/// trial_id,frames,mean_angle_deg,max_angle_deg,mean_offset_mm,operator_id,feature_change
std::string head_check_csv(std::span<const HeadEstimateCheck> checks);

Dataset build_dataset(std::span<const TrialReport> reports);

/// Synthetic cohort processed end to end into a classification dataset.
Dataset generate_dataset(const CohortSpec& spec, std::uint64_t seed, const PipelineConfig& cfg);

}  // namespace toolmotion
