#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/headcomp.hpp"

namespace toolmotion {

/// Per-operator motion style. Lengths in mm, times in s.
struct SkillProfile {
  double curvature_mean = 1.25;          ///< target path/chord ratio of a stroke
  double curvature_local_jitter = 0.03;  ///< sd of the per-stroke curvature
  double duration_mean = 0.7;
  double duration_local_jitter = 0.08;   ///< sd of the per-stroke duration
  double coverage_step = 5.0;            ///< mm^2 of new hull area per non-revisiting stroke
  double coverage_jitter = 0.0;          ///< relative sd of the per-stroke area step
  double revisit_prob = 0.2;             ///< probability a stroke starts inside the covered area
  double stroke_amplitude = 20.0;        ///< lift off the plane at the stroke end
  double stroke_length = 8.0;            ///< in-plane travel of a stroke
  double noise_sigma = 0.3;              ///< per-axis sensor position noise

  /// Throws BadProfile on negative values, revisit_prob > 1 or curvature_mean < 1.
  void validate() const;
};

/// Profiles with the expected feature orderings: experts show
/// lower SCC, higher SDC and higher CR.
SkillProfile default_expert_profile();
SkillProfile default_novice_profile();

/// Sinusoidal rotation of the head about the neck axis; amplitude 0 means no motion.
struct HeadMotion {
  double amplitude_deg = 0.0;
  double frequency_hz = 0.05;
};

struct SynthOperator {
  std::string id;
  SkillClass skill = SkillClass::Expert;
  SkillProfile profile;
};

struct TrialSpec {
  std::string id = "trial";
  std::vector<SynthOperator> operators;  ///< one, or two for a shared trial
  HeadMotion head;
  bool head_sensor = true;  ///< emit a head reference stream
  double rate = 40.0;       ///< Hz
  int strokes_min = 14;     ///< strokes per sub-trial, inclusive range
  int strokes_max = 22;
  int subtrials_per_operator = 2;
};

struct StrokeTruth {
  std::size_t start_idx = 0;  ///< sample index within the sub-trial
  std::size_t end_idx = 0;
  double start_t = 0.0;
  double end_t = 0.0;
  double duration = 0.0;
  double target_curvature = 0.0;
  double curvature = 0.0;  ///< of the noise-free path smoothed as the detector does
  Vec2 start;              ///< stroke start in plane coordinates
  bool revisit = false;
};

struct SubtrialTruth {
  std::string operator_id;
  SkillClass skill = SkillClass::Expert;
  Tip tip = Tip::A;
  Interval interval;
  std::vector<StrokeTruth> strokes;
  std::vector<double> hull_areas;  ///< AC(i) of the exact starts, zero for i < 3
  double scc = 0.0;
  double sdc = 0.0;
  double cr = 0.0;
};

struct SynthTruth {
  Vec3 tip_a_offset;
  Vec3 tip_b_offset;
  RigidTransform anatomy_to_tracker;  ///< head pose at rest
  RigidTransform head_sensor_mount;   ///< head sensor in the anatomy frame
  Plane plane{Vec3{}, Vec3{0.0, 0.0, 1.0}};  ///< septal plane, anatomy frame
  PlaneBasis basis;
  RotationAxis head_axis;             ///< anatomy frame
  HeadMotion head;
  double head_motion_start = 0.0;     ///< s
  int smooth_window = 0;
  std::vector<SubtrialTruth> subtrials;

  /// Head rotation angle (radians) at time t.
  double theta_at(double t) const;
  /// Septal plane in the tracker frame at time t.
  Plane plane_at(double t) const;
};

struct GeneratedTrial {
  Trial trial;
  SynthTruth truth;
};

/// Deterministic for a given (spec, seed). Throws BadProfile on an invalid spec.
GeneratedTrial generate_trial(const TrialSpec& spec, std::uint64_t seed);

/// Single-operator convenience form.
GeneratedTrial generate_trial(const SkillProfile& profile, const HeadMotion& head, std::uint64_t seed);

struct CohortSpec {
  int n_experts = 4;
  int n_novices = 7;
  int expert_trials = 28;  ///< trials with one expert operator
  int novice_trials = 6;   ///< trials with one novice operator
  int shared_trials = 14;  ///< trials with an expert and a novice
  SkillProfile expert = default_expert_profile();
  SkillProfile novice = default_novice_profile();
  double operator_jitter = 0.10;  ///< relative per-operator perturbation of every profile value
  HeadMotion head{0.0, 0.05};
  bool head_sensor = true;
  double rate = 40.0;
};

struct Cohort {
  std::vector<SynthOperator> operators;
  std::vector<GeneratedTrial> trials;
};

/// Operators "E1".."En" and "N1".."Nm"; trials "T01".. with per-trial sub-seeds.
Cohort generate_cohort(const CohortSpec& spec, std::uint64_t seed);

/// Poses pivoting about `pivot` with the tip at `tip_offset` in the sensor frame:
/// orientations spread over a cone of half-angle `cone_deg`, Gaussian position noise.
std::vector<RigidTransform> generate_pivot_poses(const Vec3& tip_offset, const Vec3& pivot, std::size_t count,
                                                 double cone_deg, double noise_sigma, std::mt19937_64& rng);

/// Tool tip sliding over a septal plane that rotates with the head.
struct PlaneSweep {
  Trajectory tips;
  Plane initial_plane{Vec3{}, Vec3{0.0, 0.0, 1.0}};
  RotationAxis axis;
  HeadMotion head;

  double theta_at(double t) const;
  Plane plane_at(double t) const;
};

PlaneSweep generate_plane_sweep(const HeadMotion& head, double noise_sigma, double duration, double rate,
                                std::uint64_t seed);

/// Sub-seed derived from a master seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// truth.json contents.
std::string truth_json(const SynthTruth& truth);
void write_truth(const SynthTruth& truth, const std::filesystem::path& bundle_dir);

}  // namespace toolmotion
