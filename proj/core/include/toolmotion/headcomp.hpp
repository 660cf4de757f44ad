#pragma once

#include <span>
#include <vector>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/geometry.hpp"

namespace toolmotion {

enum class HeadMode { ReferenceSensor, Estimated1Dof };

struct RotationAxis {
  Vec3 point;
  Vec3 direction;  ///< unit
};

struct HeadModel {
  HeadMode mode = HeadMode::Estimated1Dof;
  RotationAxis axis;
  double window = 2.0;         ///< s, trailing fit window
  double bracket_deg = 15.0;   ///< search half-width around the previous angle
  double tolerance_deg = 0.01; ///< golden-section termination
  /// Share of window samples fitted, taken from the contact side of the previous
  /// plane; 1 fits every sample.
  double contact_fraction = 1.0;
};

/// Neck-rotation axis: the registration's u axis (PC1) through the nose center.
RotationAxis default_head_axis(const NoseRegistration& reg);

struct PlaneTrackFrame {
  double t = 0.0;
  Plane plane;
  double theta = 0.0;  ///< radians, rotation of the initial plane about the axis
};

struct PlaneTrack {
  RotationAxis axis;
  Plane initial_plane{Vec3{}, Vec3{0.0, 0.0, 1.0}};
  std::vector<PlaneTrackFrame> frames;

  /// Linearly interpolated angle; clamps outside the track.
  double theta_at(double t) const;
};

/// Expresses tracker-frame tip points in the head sensor frame, interpolating the
/// head pose (lerp position, slerp orientation). Throws CoverageError when a point
/// has no head sample within 0.5 s.
Trajectory to_head_frame(const Trajectory& tips, const PoseStream& head_stream);

/// Sum of squared distances of `points` to the initial plane rotated by theta.
double rotated_plane_residual(std::span<const Vec3> points, const Plane& initial_plane, const RotationAxis& axis,
                              double theta);

/// Per-sample 1-DoF plane fit over the trailing window (golden-section search around
/// the previous angle). Windows holding fewer than 10 samples are widened to the 10
/// nearest samples. With contact_fraction < 1 only the samples lying furthest towards
/// the contact side are fitted (at least 10); the lift side is the side of the initial
/// plane holding most samples. Throws InsufficientData when the input has fewer than 10
/// and BadWindow when contact_fraction is outside (0, 1].
PlaneTrack estimate_plane_track(const Trajectory& tips, const Plane& initial_plane, const HeadModel& model);

/// Rotates every point by -theta(t) so the tracked plane maps onto the initial plane.
Trajectory compensate(const Trajectory& tips, const PlaneTrack& track);

struct PlaneError {
  double angle = 0.0;   ///< radians between normals, in [0, pi/2]
  double offset = 0.0;  ///< mm, |distance| from the estimate to `at` projected onto the reference plane
};

PlaneError plane_error(const Plane& estimate, const Plane& reference, const Vec3& at);

}  // namespace toolmotion
