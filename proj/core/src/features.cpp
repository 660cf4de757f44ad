#include "toolmotion/features.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "toolmotion/error.hpp"

namespace toolmotion {

double local_consistency(std::span<const double> values, int window) {
  if (values.size() < 3) {
    throw Error(ErrorKind::TooFewStrokes, fmt::format("need at least 3 strokes, got {}", values.size()));
  }
  const std::vector<double> smooth = median_filter(values, window);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - smooth[i];
    sq[i] = d * d;
  }
  return median(sq);
}

double scc(std::span<const double> curvatures, int window) { return local_consistency(curvatures, window); }

double sdc(std::span<const double> durations, int window) { return local_consistency(durations, window); }

SearchGraph build_search_graph(std::span<const Vec2> vertices, std::span<const double> lengths) {
  if (vertices.size() < 3) {
    throw Error(ErrorKind::TooFewStrokes, fmt::format("search graph needs at least 3 strokes, got {}", vertices.size()));
  }
  SearchGraph g;
  g.vertices.assign(vertices.begin(), vertices.end());
  g.lengths.assign(lengths.begin(), lengths.end());
  g.lengths.resize(g.vertices.size(), 0.0);
  g.hull_areas.resize(g.vertices.size(), 0.0);
  for (std::size_t i = 3; i <= g.vertices.size(); ++i) {
    const double area = convex_hull_area(std::span<const Vec2>(g.vertices.data(), i));
    // a superset hull never shrinks; guard against rounding
    g.hull_areas[i - 1] = std::max(area, g.hull_areas[i - 2]);
  }
  return g;
}

SearchGraph build_search_graph(std::span<const Stroke> strokes) {
  std::vector<Vec2> vertices;
  std::vector<double> lengths;
  for (const Stroke& s : strokes) {
    vertices.push_back(s.start_point_2d);
    lengths.push_back(s.path_length);
  }
  return build_search_graph(vertices, lengths);
}

std::vector<double> hull_increments(const SearchGraph& g) {
  std::vector<double> inc(g.hull_areas.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < g.hull_areas.size(); ++i) {
    inc[i] = g.hull_areas[i] - prev;
    prev = g.hull_areas[i];
  }
  return inc;
}

double coverage_rate(const SearchGraph& g) {
  if (g.size() < 4) {
    throw Error(ErrorKind::TooFewStrokes, fmt::format("coverage rate needs at least 4 strokes, got {}", g.size()));
  }
  std::vector<double> inc;
  inc.reserve(g.size() - 3);
  for (std::size_t i = 4; i <= g.size(); ++i) inc.push_back(g.area(i) - g.area(i - 1));
  return median(inc);
}

SubtrialResult subtrial_features(const SubTrial& sub, const NoseRegistration& reg, const StrokeConfig& stroke_cfg,
                                 const FeatureConfig& cfg) {
  SubtrialResult out;
  out.strokes = detect_strokes(sub.tip_trajectory, reg.plane, reg.basis, reg.nose_center, stroke_cfg);
  for (const Stroke& s : out.strokes) {
    out.curvatures.push_back(stroke_curvature(s));
    out.durations.push_back(s.duration);
  }
  if (out.strokes.size() >= 3) out.graph = build_search_graph(out.strokes);
  if (out.strokes.size() < std::max<std::size_t>(cfg.min_strokes, 4)) return out;

  FeatureVector fv;
  fv.scc = scc(out.curvatures, cfg.median_window);
  fv.sdc = sdc(out.durations, cfg.median_window);
  fv.cr = coverage_rate(*out.graph);
  fv.n_strokes = out.strokes.size();
  out.features = fv;
  return out;
}

FeatureVector trial_features(std::span<const FeatureVector> subvectors) {
  if (subvectors.empty()) throw Error(ErrorKind::AllExcluded, "every sub-trial was excluded");
  std::vector<double> a, b, c;
  FeatureVector out;
  for (const FeatureVector& fv : subvectors) {
    a.push_back(fv.scc);
    b.push_back(fv.sdc);
    c.push_back(fv.cr);
    out.n_strokes += fv.n_strokes;
  }
  out.scc = median(a);
  out.sdc = median(b);
  out.cr = median(c);
  return out;
}

std::vector<StrokeObservation> stroke_observations(const SubtrialResult& result) {
  std::vector<StrokeObservation> obs;
  if (!result.graph) return obs;
  const std::vector<double> inc = hull_increments(*result.graph);
  for (std::size_t i = 0; i < result.strokes.size(); ++i) {
    obs.push_back({result.curvatures[i], result.durations[i], inc[i]});
  }
  return obs;
}

}  // namespace toolmotion
