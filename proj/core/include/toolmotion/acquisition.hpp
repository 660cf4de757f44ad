#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toolmotion/geometry.hpp"

namespace toolmotion {

// ============================================================================
// Data model
// ============================================================================

struct PoseSample {
  double t = 0.0;       ///< seconds
  RigidTransform pose;  ///< sensor frame in tracker frame
};

struct PoseStream {
  std::vector<PoseSample> samples;
  double nominal_rate = 0.0;  ///< Hz
};

/// Throws OrderError naming the first offending index unless times are finite and strictly increasing.
void validate_stream(const PoseStream& stream);

struct TipCalibration {
  Vec3 tip_offset;            ///< mm, sensor frame
  double residual_rms = 0.0;  ///< per-axis RMS of the pivot residual, mm
};

enum class SkillClass { Expert, Novice };
enum class Tip { A, B };

std::string_view to_string(SkillClass c);
std::string_view to_string(Tip t);
SkillClass parse_skill_class(std::string_view s);
Tip parse_tip(std::string_view s);

struct Interval {
  double t_start = 0.0;
  double t_end = 0.0;

  bool contains(double t) const { return t >= t_start && t < t_end; }
  bool operator==(const Interval&) const = default;
};

struct Annotation {
  Interval interval;
  std::string operator_id;
  SkillClass operator_class = SkillClass::Expert;
  Tip active_tip = Tip::A;
  bool cottle_in_use = false;
};

/// Optional override of the 1-DoF head rotation axis, tracker frame.
struct AxisOverride {
  Vec3 point;
  Vec3 direction;
};

struct Trial {
  std::string id;
  PoseStream cottle_stream;
  std::optional<PoseStream> head_stream;
  std::vector<Annotation> annotations;
  std::optional<TipCalibration> tip_a;
  std::optional<TipCalibration> tip_b;
  Interval registration_interval;
  Tip registration_tip = Tip::A;
  std::optional<Interval> pivot_a;
  std::optional<Interval> pivot_b;
  std::optional<AxisOverride> head_axis;

  const std::optional<TipCalibration>& calibration(Tip tip) const { return tip == Tip::A ? tip_a : tip_b; }
  const std::optional<Interval>& pivot_interval(Tip tip) const { return tip == Tip::A ? pivot_a : pivot_b; }
};

/// Checks every Trial invariant; throws OrderError / AnnotationError / SchemaError.
void validate_trial(const Trial& trial);

struct TimedPoint {
  double t = 0.0;
  Vec3 p;
};

using Trajectory = std::vector<TimedPoint>;

struct SubTrial {
  std::string trial_id;
  std::string operator_id;
  SkillClass operator_class = SkillClass::Expert;
  Tip active_tip = Tip::A;
  Interval interval;
  Trajectory tip_trajectory;  ///< head frame
};

// ============================================================================
// Trial bundles
// ============================================================================

/// Reads a bundle directory (cottle.csv, optional head.csv, meta.json).
/// Errors: ParseError, SchemaError, OrderError, AnnotationError.
Trial parse_trial(const std::filesystem::path& bundle_dir);

/// Writes a bundle directory. Numbers use the shortest round-trip decimal form.
void write_trial(const Trial& trial, const std::filesystem::path& bundle_dir);

/// Reads / writes one pose CSV (`t,px,py,pz,qw,qx,qy,qz`).
PoseStream read_pose_csv(const std::filesystem::path& path, double nominal_rate);
void write_pose_csv(const PoseStream& stream, const std::filesystem::path& path);
std::string format_pose_csv(const PoseStream& stream);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_number(double v);

// ============================================================================
// Calibration and registration
// ============================================================================

/// Least-squares pivot calibration over poses that rotate about a fixed tip.
/// Throws DegenerateMotion when the stacked system's smallest singular value is <= 1e-6.
TipCalibration pivot_calibration(std::span<const RigidTransform> poses);

/// Poses of the stream whose time lies in the interval.
std::vector<RigidTransform> poses_in(const PoseStream& stream, const Interval& interval);

/// Per sample: R * tip_offset + p.
Trajectory tip_trajectory(const PoseStream& stream, const TipCalibration& cal);

struct NoseRegistration {
  Plane plane{Vec3{}, Vec3{0.0, 0.0, 1.0}};  ///< through the centroid, spanned by PC1 and PC3
  PlaneBasis basis;   ///< (PC1, PC3)
  Vec3 nose_center;   ///< registration centroid
};

/// Septal plane from the registration trace: normal = PC1 x PC3.
NoseRegistration register_nose(std::span<const Vec3> tip_points);

/// Same registration with the normal and v axis negated (keeps u x v = n).
NoseRegistration flipped(const NoseRegistration& reg);

std::vector<Vec3> points_in(const Trajectory& trajectory, const Interval& interval);

// ============================================================================
// Sub-trials
// ============================================================================

/// Head-frame tip trajectories for both Cottle ends, sampled at the cottle stream times.
struct TipTrajectories {
  Trajectory tip_a;
  Trajectory tip_b;

  const Trajectory& of(Tip tip) const { return tip == Tip::A ? tip_a : tip_b; }
};

/// One SubTrial per maximal in-use interval with a constant operator and tip.
/// Abutting in-use annotations with the same operator and tip are merged.
/// Samples are assigned by half-open interval membership [t_start, t_end).
std::vector<SubTrial> segment_subtrials(const Trial& trial, const TipTrajectories& head_frame);

}  // namespace toolmotion
