#pragma once

#include <vector>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/geometry.hpp"

namespace toolmotion {

struct StrokeConfig {
  int smooth_window = 0;  ///< samples; 0 selects default_smooth_window(rate)
  double min_duration = 0.15;
  double max_duration = 3.0;
  double min_length = 3.0;
  double max_center_distance = 80.0;
  double min_prominence = 1.0;

  /// Throws BadWindow / BadProfile on invalid gates.
  void validate() const;
};

/// max(3, round(0.25 s * rate)), bumped to the next odd count.
int default_smooth_window(double rate_hz);

/// Window actually used for a trajectory: cfg.smooth_window or the default for its sample rate.
int resolve_smooth_window(const StrokeConfig& cfg, const Trajectory& tips);

struct Stroke {
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;
  double start_t = 0.0;
  double end_t = 0.0;
  double duration = 0.0;
  std::vector<Vec3> path;  ///< smoothed positions start_idx..end_idx
  double path_length = 0.0;
  double chord_length = 0.0;
  Vec2 start_point_2d;         ///< smoothed start projected onto the plane
  double peak_distance = 0.0;  ///< signed plane distance at end_idx
  double prominence = 0.0;     ///< max - min of the unsigned distance over the stroke
};

struct DistanceSignal {
  std::vector<double> t;
  std::vector<Vec3> smoothed;  ///< moving-average positions
  std::vector<double> distance;  ///< unsigned distance of smoothed positions to the plane
};

DistanceSignal distance_signal(const Trajectory& tips, const Plane& plane, int smooth_window);

struct Extremum {
  std::size_t index = 0;
  bool is_max = false;

  bool operator==(const Extremum&) const = default;
};

/// Strict local extrema; a plateau reports its first sample; end samples compare
/// against their single neighbour.
std::vector<Extremum> local_extrema(const std::vector<double>& values);

/// Strokes run from a local distance minimum to the next local maximum and must
/// pass every gate in cfg.
std::vector<Stroke> detect_strokes(const Trajectory& tips, const Plane& plane, const PlaneBasis& basis,
                                   const Vec3& nose_center, const StrokeConfig& cfg);

/// Rechecks every gate from the stroke's fields.
bool passes_gates(const Stroke& s, const Vec3& nose_center, const StrokeConfig& cfg);

double polyline_length(const std::vector<Vec3>& path);

/// Path length over chord length. Throws ZeroChord when the chord is below 1e-6 mm.
double stroke_curvature(const Stroke& s);

}  // namespace toolmotion
