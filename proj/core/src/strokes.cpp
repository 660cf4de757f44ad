#include "toolmotion/strokes.hpp"

#include <algorithm>

#include "toolmotion/error.hpp"

namespace toolmotion {

void StrokeConfig::validate() const {
  if (smooth_window < 0) throw Error(ErrorKind::BadWindow, "smooth_window must be >= 0");
  if (!(min_duration > 0.0 && min_duration < max_duration)) {
    throw Error(ErrorKind::BadProfile, "stroke gates need 0 < min_duration < max_duration");
  }
  if (!(min_length > 0.0)) throw Error(ErrorKind::BadProfile, "min_length must be > 0");
  if (!(max_center_distance > 0.0)) throw Error(ErrorKind::BadProfile, "max_center_distance must be > 0");
  if (!(min_prominence >= 0.0)) throw Error(ErrorKind::BadProfile, "min_prominence must be >= 0");
}

int default_smooth_window(double rate_hz) {
  int w = std::max(3, static_cast<int>(std::lround(0.25 * rate_hz)));
  if (w % 2 == 0) ++w;
  return w;
}

int resolve_smooth_window(const StrokeConfig& cfg, const Trajectory& tips) {
  if (cfg.smooth_window > 0) return cfg.smooth_window;
  if (tips.size() < 2) return 3;
  std::vector<double> dt;
  dt.reserve(tips.size() - 1);
  for (std::size_t i = 1; i < tips.size(); ++i) dt.push_back(tips[i].t - tips[i - 1].t);
  const double step = median(dt);
  return default_smooth_window(step > 0.0 ? 1.0 / step : 0.0);
}

DistanceSignal distance_signal(const Trajectory& tips, const Plane& plane, int smooth_window) {
  DistanceSignal sig;
  std::vector<Vec3> raw;
  raw.reserve(tips.size());
  sig.t.reserve(tips.size());
  for (const TimedPoint& tp : tips) {
    raw.push_back(tp.p);
    sig.t.push_back(tp.t);
  }
  sig.smoothed = moving_average(raw, smooth_window);
  sig.distance.reserve(tips.size());
  for (const Vec3& p : sig.smoothed) sig.distance.push_back(std::abs(point_plane_distance(p, plane)));
  return sig;
}

std::vector<Extremum> local_extrema(const std::vector<double>& values) {
  std::vector<Extremum> out;
  const std::size_t n = values.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[j + 1] == values[i]) ++j;
    const bool has_left = i > 0;
    const bool has_right = j + 1 < n;
    if (has_left || has_right) {
      const double v = values[i];
      const bool below = (!has_left || values[i - 1] > v) && (!has_right || values[j + 1] > v);
      const bool above = (!has_left || values[i - 1] < v) && (!has_right || values[j + 1] < v);
      if (below) out.push_back({i, false});
      if (above) out.push_back({i, true});
    }
    i = j + 1;
  }
  return out;
}

double polyline_length(const std::vector<Vec3>& path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += distance(path[i], path[i - 1]);
  return len;
}

bool passes_gates(const Stroke& s, const Vec3& nose_center, const StrokeConfig& cfg) {
  if (s.duration < cfg.min_duration || s.duration > cfg.max_duration) return false;
  if (s.path_length < cfg.min_length) return false;
  if (s.path.empty()) return false;
  if (distance(s.path.front(), nose_center) > cfg.max_center_distance) return false;
  if (distance(s.path.back(), nose_center) > cfg.max_center_distance) return false;
  return s.prominence >= cfg.min_prominence;
}

std::vector<Stroke> detect_strokes(const Trajectory& tips, const Plane& plane, const PlaneBasis& basis,
                                   const Vec3& nose_center, const StrokeConfig& cfg) {
  cfg.validate();
  check_basis(plane, basis);
  const int window = resolve_smooth_window(cfg, tips);
  std::vector<Stroke> strokes;
  if (tips.size() < 2 * static_cast<std::size_t>(window)) return strokes;

  const DistanceSignal sig = distance_signal(tips, plane, window);
  const std::vector<Extremum> extrema = local_extrema(sig.distance);

  for (std::size_t k = 0; k + 1 < extrema.size(); ++k) {
    if (extrema[k].is_max || !extrema[k + 1].is_max) continue;
    const std::size_t s = extrema[k].index;
    const std::size_t e = extrema[k + 1].index;

    Stroke st;
    st.start_idx = s;
    st.end_idx = e;
    st.start_t = sig.t[s];
    st.end_t = sig.t[e];
    st.duration = st.end_t - st.start_t;
    st.path.assign(sig.smoothed.begin() + static_cast<std::ptrdiff_t>(s),
                   sig.smoothed.begin() + static_cast<std::ptrdiff_t>(e) + 1);
    st.path_length = polyline_length(st.path);
    st.chord_length = distance(st.path.front(), st.path.back());
    st.start_point_2d = project_to_plane(st.path.front(), plane, basis);
    st.peak_distance = point_plane_distance(st.path.back(), plane);
    const auto [lo, hi] = std::minmax_element(sig.distance.begin() + static_cast<std::ptrdiff_t>(s),
                                              sig.distance.begin() + static_cast<std::ptrdiff_t>(e) + 1);
    st.prominence = *hi - *lo;

    if (passes_gates(st, nose_center, cfg)) strokes.push_back(std::move(st));
  }
  return strokes;
}

double stroke_curvature(const Stroke& s) {
  if (s.chord_length < 1e-6) {
    throw Error(ErrorKind::ZeroChord, "stroke returns to its start (chord < 1e-6 mm)");
  }
  return s.path_length / s.chord_length;
}

}  // namespace toolmotion
