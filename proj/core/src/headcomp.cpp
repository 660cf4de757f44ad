#include "toolmotion/headcomp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toolmotion/error.hpp"

namespace toolmotion {

namespace {

constexpr double kMaxHeadGap = 0.5;  // s
constexpr std::size_t kMinWindowSamples = 10;
constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

RotationAxis default_head_axis(const NoseRegistration& reg) { return {reg.nose_center, reg.basis.u}; }

double PlaneTrack::theta_at(double t) const {
  if (frames.empty()) return 0.0;
  if (t <= frames.front().t) return frames.front().theta;
  if (t >= frames.back().t) return frames.back().theta;
  const auto it = std::lower_bound(frames.begin(), frames.end(), t,
                                   [](const PlaneTrackFrame& f, double value) { return f.t < value; });
  const PlaneTrackFrame& hi = *it;
  if (hi.t == t) return hi.theta;
  const PlaneTrackFrame& lo = *(it - 1);
  const double s = (t - lo.t) / (hi.t - lo.t);
  return lo.theta + s * (hi.theta - lo.theta);
}

Trajectory to_head_frame(const Trajectory& tips, const PoseStream& head_stream) {
  const auto& head = head_stream.samples;
  if (head.empty()) throw Error(ErrorKind::CoverageError, "head stream is empty");

  Trajectory out;
  out.reserve(tips.size());
  for (const TimedPoint& tp : tips) {
    const auto it = std::lower_bound(head.begin(), head.end(), tp.t,
                                     [](const PoseSample& s, double value) { return s.t < value; });
    RigidTransform pose;
    double gap = 0.0;
    if (it == head.begin()) {
      gap = it->t - tp.t;
      pose = it->pose;
    } else if (it == head.end()) {
      gap = tp.t - head.back().t;
      pose = head.back().pose;
    } else if (it->t == tp.t) {
      pose = it->pose;
    } else {
      const PoseSample& lo = *(it - 1);
      const PoseSample& hi = *it;
      gap = std::min(tp.t - lo.t, hi.t - tp.t);
      pose = interpolate(lo.pose, hi.pose, (tp.t - lo.t) / (hi.t - lo.t));
    }
    if (gap > kMaxHeadGap) {
      throw Error(ErrorKind::CoverageError, fmt::format("no head pose within {} s of t = {}", kMaxHeadGap, tp.t));
    }
    out.push_back({tp.t, pose.inverse().apply(tp.p)});
  }
  return out;
}

double rotated_plane_residual(std::span<const Vec3> points, const Plane& initial_plane, const RotationAxis& axis,
                              double theta) {
  const Plane plane = rotate_plane(initial_plane, axis.point, axis.direction, theta);
  double sum = 0.0;
  for (const Vec3& p : points) {
    const double d = point_plane_distance(p, plane);
    sum += d * d;
  }
  return sum;
}

PlaneTrack estimate_plane_track(const Trajectory& tips, const Plane& initial_plane, const HeadModel& model) {
  if (tips.size() < kMinWindowSamples) {
    throw Error(ErrorKind::InsufficientData,
                fmt::format("plane tracking needs at least {} samples, got {}", kMinWindowSamples, tips.size()));
  }
  if (!(model.window > 0.0)) throw Error(ErrorKind::BadWindow, "head model window must be > 0");
  if (!(model.contact_fraction > 0.0 && model.contact_fraction <= 1.0)) {
    throw Error(ErrorKind::BadWindow, "head model contact_fraction must be in (0, 1]");
  }

  PlaneTrack track;
  track.axis = {model.axis.point, model.axis.direction.normalized()};
  track.initial_plane = initial_plane;
  track.frames.reserve(tips.size());

  const double bracket = model.bracket_deg * kDeg;
  const double tol = model.tolerance_deg * kDeg;
  constexpr double inv_phi = 0.6180339887498949;

  // strokes lift the tip off one side of the plane; contact lies at the other extreme
  double lift_side = 1.0;
  if (model.contact_fraction < 1.0) {
    long balance = 0;
    for (const TimedPoint& tp : tips) balance += point_plane_distance(tp.p, initial_plane) >= 0.0 ? 1 : -1;
    if (balance < 0) lift_side = -1.0;
  }

  std::vector<Vec3> window;
  std::vector<std::pair<double, std::size_t>> height;
  std::size_t lo = 0;
  double previous = 0.0;
  for (std::size_t k = 0; k < tips.size(); ++k) {
    while (tips[lo].t < tips[k].t - model.window) ++lo;
    std::size_t first = lo;
    std::size_t last = k;
    if (last - first + 1 < kMinWindowSamples) {
      last = std::max(k, kMinWindowSamples - 1);
      first = last + 1 - kMinWindowSamples;
    }
    window.clear();
    if (model.contact_fraction < 1.0) {
      const Plane current = rotate_plane(initial_plane, track.axis.point, track.axis.direction, previous);
      height.clear();
      for (std::size_t i = first; i <= last; ++i) {
        height.push_back({lift_side * point_plane_distance(tips[i].p, current), i});
      }
      const auto n = static_cast<double>(height.size());
      const std::size_t keep =
          std::max(kMinWindowSamples, static_cast<std::size_t>(std::ceil(model.contact_fraction * n)));
      std::partial_sort(height.begin(), height.begin() + static_cast<std::ptrdiff_t>(keep), height.end());
      for (std::size_t j = 0; j < keep; ++j) window.push_back(tips[height[j].second].p);
    } else {
      for (std::size_t i = first; i <= last; ++i) window.push_back(tips[i].p);
    }

    auto f = [&](double theta) { return rotated_plane_residual(window, initial_plane, track.axis, theta); };
    double a = previous - bracket;
    double b = previous + bracket;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = f(d);
      }
    }
    double theta = 0.5 * (a + b);
    // never worse than staying put
    if (f(previous) <= f(theta)) theta = previous;

    track.frames.push_back({tips[k].t, rotate_plane(initial_plane, track.axis.point, track.axis.direction, theta), theta});
    previous = theta;
  }
  return track;
}

Trajectory compensate(const Trajectory& tips, const PlaneTrack& track) {
  Trajectory out;
  out.reserve(tips.size());
  for (const TimedPoint& tp : tips) {
    const double theta = track.theta_at(tp.t);
    out.push_back({tp.t, theta == 0.0 ? tp.p : rotate_about_axis(tp.p, track.axis.point, track.axis.direction, -theta)});
  }
  return out;
}

PlaneError plane_error(const Plane& estimate, const Plane& reference, const Vec3& at) {
  double angle = angle_between(estimate.normal(), reference.normal());
  if (angle > std::numbers::pi / 2) angle = std::numbers::pi - angle;
  const Vec3 on_reference = at - reference.normal() * point_plane_distance(at, reference);
  return {angle, std::abs(point_plane_distance(on_reference, estimate))};
}

}  // namespace toolmotion
