#include "toolmotion/acquisition.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>

#include "toolmotion/error.hpp"

namespace toolmotion {

std::string_view to_string(SkillClass c) { return c == SkillClass::Expert ? "expert" : "novice"; }
std::string_view to_string(Tip t) { return t == Tip::A ? "tip_a" : "tip_b"; }

SkillClass parse_skill_class(std::string_view s) {
  if (s == "expert") return SkillClass::Expert;
  if (s == "novice") return SkillClass::Novice;
  throw Error(ErrorKind::ParseError, fmt::format("unknown operator_class '{}'", s));
}

Tip parse_tip(std::string_view s) {
  if (s == "tip_a") return Tip::A;
  if (s == "tip_b") return Tip::B;
  throw Error(ErrorKind::ParseError, fmt::format("unknown tip '{}'", s));
}

void validate_stream(const PoseStream& stream) {
  for (std::size_t i = 0; i < stream.samples.size(); ++i) {
    const double t = stream.samples[i].t;
    if (!std::isfinite(t)) {
      throw Error(ErrorKind::OrderError, fmt::format("non-finite timestamp at row {}", i));
    }
    if (i > 0 && !(t > stream.samples[i - 1].t)) {
      throw Error(ErrorKind::OrderError, fmt::format("timestamp not strictly increasing at row {}", i));
    }
  }
}

void validate_trial(const Trial& trial) {
  validate_stream(trial.cottle_stream);
  if (trial.head_stream) validate_stream(*trial.head_stream);
  if (trial.cottle_stream.samples.size() < 2) {
    throw Error(ErrorKind::SchemaError, "cottle stream needs at least 2 samples");
  }
  const double t_first = trial.cottle_stream.samples.front().t;
  const double t_last = trial.cottle_stream.samples.back().t;
  const double rate = trial.cottle_stream.nominal_rate;
  const double slack = (rate > 0.0 ? 1.0 / rate : 1.0) + 1e-9;

  std::vector<const Annotation*> sorted;
  for (const Annotation& a : trial.annotations) {
    if (!(a.interval.t_start < a.interval.t_end)) {
      throw Error(ErrorKind::AnnotationError,
                  fmt::format("annotation [{}, {}) has t_start >= t_end", a.interval.t_start, a.interval.t_end));
    }
    if (a.interval.t_start < t_first - 1e-9 || a.interval.t_end > t_last + slack) {
      throw Error(ErrorKind::AnnotationError,
                  fmt::format("annotation [{}, {}) outside the stream time range", a.interval.t_start,
                              a.interval.t_end));
    }
    sorted.push_back(&a);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Annotation* a, const Annotation* b) { return a->interval.t_start < b->interval.t_start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->interval.t_start < sorted[i - 1]->interval.t_end - 1e-12) {
      throw Error(ErrorKind::AnnotationError,
                  fmt::format("annotations overlap at t = {}", sorted[i]->interval.t_start));
    }
  }
  if (!(trial.registration_interval.t_start < trial.registration_interval.t_end)) {
    throw Error(ErrorKind::AnnotationError, "registration interval is empty");
  }
  for (const Annotation& a : trial.annotations) {
    if (a.cottle_in_use && a.interval.t_start < trial.registration_interval.t_end - 1e-12) {
      throw Error(ErrorKind::AnnotationError, "registration interval must precede every in-use annotation");
    }
  }
  for (const auto& pivot : {trial.pivot_a, trial.pivot_b}) {
    if (pivot && !(pivot->t_start < pivot->t_end)) {
      throw Error(ErrorKind::AnnotationError, "pivot interval is empty");
    }
  }
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

TipCalibration pivot_calibration(std::span<const RigidTransform> poses) {
  if (poses.size() < 3) {
    throw Error(ErrorKind::DegenerateMotion, "pivot calibration needs at least 3 poses");
  }
  const auto n = static_cast<Eigen::Index>(poses.size());
  // [R_i | -I] [tip; pivot] = -p_i
  Eigen::MatrixXd a(3 * n, 6);
  Eigen::VectorXd b(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RigidTransform& pose = poses[static_cast<std::size_t>(i)];
    const Mat3 r = pose.rotation.matrix();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        a(3 * i + row, col) = r[row][col];
        a(3 * i + row, 3 + col) = row == col ? -1.0 : 0.0;
      }
    }
    b(3 * i + 0) = -pose.translation.x;
    b(3 * i + 1) = -pose.translation.y;
    b(3 * i + 2) = -pose.translation.z;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smallest = svd.singularValues().minCoeff();
  if (!(smallest > 1e-6)) {
    throw Error(ErrorKind::DegenerateMotion,
                fmt::format("rotations do not determine the tip offset (smallest singular value {:.3g})", smallest));
  }
  const Eigen::VectorXd x = svd.solve(b);
  const Eigen::VectorXd r = a * x - b;

  TipCalibration cal;
  cal.tip_offset = {x(0), x(1), x(2)};
  cal.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(3 * n));
  return cal;
}

std::vector<RigidTransform> poses_in(const PoseStream& stream, const Interval& interval) {
  std::vector<RigidTransform> out;
  for (const PoseSample& s : stream.samples) {
    if (interval.contains(s.t)) out.push_back(s.pose);
  }
  return out;
}

Trajectory tip_trajectory(const PoseStream& stream, const TipCalibration& cal) {
  Trajectory out;
  out.reserve(stream.samples.size());
  for (const PoseSample& s : stream.samples) {
    out.push_back({s.t, s.pose.apply(cal.tip_offset)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

NoseRegistration register_nose(std::span<const Vec3> tip_points) {
  const Pca3 pca = pca3(tip_points);
  const Vec3& u = pca.components[0];
  const Vec3& v = pca.components[2];
  const Vec3 normal = u.cross(v).normalized();
  return {Plane(pca.centroid, normal), PlaneBasis{u, v}, pca.centroid};
}

NoseRegistration flipped(const NoseRegistration& reg) {
  return {reg.plane.flipped(), PlaneBasis{reg.basis.u, -reg.basis.v}, reg.nose_center};
}

std::vector<Vec3> points_in(const Trajectory& trajectory, const Interval& interval) {
  std::vector<Vec3> out;
  for (const TimedPoint& tp : trajectory) {
    if (interval.contains(tp.t)) out.push_back(tp.p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sub-trials
// ---------------------------------------------------------------------------

std::vector<SubTrial> segment_subtrials(const Trial& trial, const TipTrajectories& head_frame) {
  std::vector<Annotation> sorted = trial.annotations;
  std::sort(sorted.begin(), sorted.end(),
            [](const Annotation& a, const Annotation& b) { return a.interval.t_start < b.interval.t_start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].interval.t_start < sorted[i - 1].interval.t_end - 1e-12) {
      throw Error(ErrorKind::AnnotationError, fmt::format("annotations overlap at t = {}", sorted[i].interval.t_start));
    }
  }

  std::vector<Annotation> merged;
  for (const Annotation& a : sorted) {
    if (!a.cottle_in_use) continue;
    if (!merged.empty()) {
      Annotation& last = merged.back();
      if (std::abs(a.interval.t_start - last.interval.t_end) <= 1e-9 && a.operator_id == last.operator_id &&
          a.operator_class == last.operator_class && a.active_tip == last.active_tip) {
        last.interval.t_end = a.interval.t_end;
        continue;
      }
    }
    merged.push_back(a);
  }

  std::vector<SubTrial> out;
  for (const Annotation& a : merged) {
    SubTrial sub;
    sub.trial_id = trial.id;
    sub.operator_id = a.operator_id;
    sub.operator_class = a.operator_class;
    sub.active_tip = a.active_tip;
    sub.interval = a.interval;
    for (const TimedPoint& tp : head_frame.of(a.active_tip)) {
      if (a.interval.contains(tp.t)) sub.tip_trajectory.push_back(tp);
    }
    out.push_back(std::move(sub));
  }
  return out;
}

}  // namespace toolmotion
