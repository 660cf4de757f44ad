#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/strokes.hpp"

namespace toolmotion {

struct FeatureVector {
  double scc = 0.0;  ///< stroke curvature consistency (unitless^2)
  double sdc = 0.0;  ///< stroke duration consistency (s^2)
  double cr = 0.0;   ///< coverage rate (mm^2 per stroke)
  std::size_t n_strokes = 0;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
  int median_window = 5;
  std::size_t min_strokes = 7;
};

/// median((x - median_filter(x, window))^2); throws TooFewStrokes below 3 values.
double local_consistency(std::span<const double> values, int window);

/// Curvature consistency over per-stroke curvatures.
double scc(std::span<const double> curvatures, int window);
/// Duration consistency over per-stroke durations.
double sdc(std::span<const double> durations, int window);

/// Type II search graph: plane-projected stroke starts in stroke order.
struct SearchGraph {
  std::vector<Vec2> vertices;
  std::vector<double> lengths;     ///< path length of each stroke, mm
  std::vector<double> hull_areas;  ///< hull_areas[i-1] = AC(i); zero for i < 3

  std::size_t size() const { return vertices.size(); }
  /// AC(i) for 1-based prefix length i.
  double area(std::size_t i) const { return hull_areas.at(i - 1); }
};

/// Throws TooFewStrokes below 3 strokes.
SearchGraph build_search_graph(std::span<const Stroke> strokes);
SearchGraph build_search_graph(std::span<const Vec2> vertices, std::span<const double> lengths);

/// AC(i) - AC(i-1) for i = 1..N with AC(0) = 0.
std::vector<double> hull_increments(const SearchGraph& g);

/// Median hull-area increase per stroke for i = 4..N. Throws TooFewStrokes when N < 4.
double coverage_rate(const SearchGraph& g);

struct SubtrialResult {
  std::vector<Stroke> strokes;
  std::vector<double> curvatures;
  std::vector<double> durations;
  std::optional<SearchGraph> graph;
  std::optional<FeatureVector> features;  ///< nullopt: excluded (too few strokes)

  bool excluded() const { return !features.has_value(); }
};

/// Detects strokes and computes SCC / SDC / CR. Sub-trials with fewer than
/// cfg.min_strokes strokes come back excluded rather than as an error.
SubtrialResult subtrial_features(const SubTrial& sub, const NoseRegistration& reg, const StrokeConfig& stroke_cfg,
                                 const FeatureConfig& cfg);

/// Component-wise median over sub-trial vectors; n_strokes is the sum.
/// Throws AllExcluded for an empty input.
FeatureVector trial_features(std::span<const FeatureVector> subvectors);

/// Per-stroke (curvature, duration, hull-area increment), the HMM observation.
using StrokeObservation = std::array<double, 3>;
std::vector<StrokeObservation> stroke_observations(const SubtrialResult& result);

}  // namespace toolmotion
