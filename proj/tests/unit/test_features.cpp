#include <algorithm>
#include <numeric>

#include "test_helpers.hpp"
#include "toolmotion/features.hpp"

using namespace toolmotion;
using namespace toolmotion::testing;

namespace {

/// Stroke trace at 40 Hz climbing off the z = 0 plane, each stroke starting 1 mm further along x
/// and 2 mm further along y.
SubTrial sawtooth_subtrial(int n_strokes) {
  SubTrial sub;
  sub.trial_id = "T";
  sub.operator_id = "E1";
  const double dt = 1.0 / 40.0;
  double t = 0.0;
  for (int k = 0; k < n_strokes; ++k) {
    for (int i = 0; i < 28; ++i, t += dt) {
      const double s = i / 28.0;
      sub.tip_trajectory.push_back({t, {k + 8.0 * s, 2.0 * k, 15.0 * s}});
    }
    for (int i = 0; i < 20; ++i, t += dt) {
      sub.tip_trajectory.push_back({t, {k + 8.0, 2.0 * k, 15.0 * (1.0 - i / 20.0)}});
    }
  }
  sub.tip_trajectory.push_back({t, {static_cast<double>(n_strokes), 2.0 * n_strokes, 0.0}});
  return sub;
}

NoseRegistration flat_registration() {
  NoseRegistration reg;
  reg.plane = Plane({0, 0, 0}, {0, 0, 1});
  reg.basis = {{1, 0, 0}, {0, 1, 0}};
  reg.nose_center = {5, 10, 0};
  return reg;
}

}  // namespace

TEST(Consistency, HandExamples) {
  const std::vector<double> ramp{0, 1, 2, 3, 4};
  // truncated window-5 medians: 1, 1.5, 2, 2.5, 3
  EXPECT_DOUBLE_EQ(local_consistency(ramp, 5), 0.25);
  const std::vector<double> spike{1, 5, 1, 1, 1};
  EXPECT_DOUBLE_EQ(local_consistency(spike, 5), 0.0);
  const std::vector<double> flat(9, 1.3);
  EXPECT_DOUBLE_EQ(scc(flat, 5), 0.0);
  EXPECT_DOUBLE_EQ(sdc(flat, 5), 0.0);
}

TEST(Consistency, TooFewValues) {
  const std::vector<double> two{1, 2};
  EXPECT_ERROR_KIND(scc(two, 5), ErrorKind::TooFewStrokes);
}

TEST(Consistency, ShiftInvariantAndQuadraticInScaleProperty) {
  auto rng = make_rng(61);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto v = random_values(rng, 5 + trial % 30, 1.2, 0.1);
    const double shift = u(rng);
    const double scale = u(rng);
    std::vector<double> shifted(v.size());
    std::vector<double> scaled(v.size());
    std::transform(v.begin(), v.end(), shifted.begin(), [&](double x) { return x + shift; });
    std::transform(v.begin(), v.end(), scaled.begin(), [&](double x) { return x * scale; });
    const double base = local_consistency(v, 5);
    EXPECT_NEAR(local_consistency(shifted, 5), base, 1e-9);
    EXPECT_NEAR(local_consistency(scaled, 5), scale * scale * base, 1e-12 + 1e-9 * scale * scale * base);
    EXPECT_GE(base, 0.0);
  }
}

TEST(SearchGraph, UnitSquareAreasAndCoverage) {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const SearchGraph g = build_search_graph(square, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(g.hull_areas, (std::vector<double>{0, 0, 0.5, 1.0}));
  EXPECT_EQ(hull_increments(g), (std::vector<double>{0, 0, 0.5, 0.5}));
  EXPECT_DOUBLE_EQ(g.area(4), 1.0);
  EXPECT_DOUBLE_EQ(coverage_rate(g), 0.5);

  std::vector<Vec2> with_interior = square;
  with_interior.push_back({0.5, 0.5});
  EXPECT_DOUBLE_EQ(coverage_rate(build_search_graph(with_interior, std::vector<double>{})), 0.25);
}

TEST(SearchGraph, TooFewStrokes) {
  const std::vector<Vec2> two{{0, 0}, {1, 0}};
  EXPECT_ERROR_KIND(build_search_graph(two, std::vector<double>{}), ErrorKind::TooFewStrokes);
  const std::vector<Vec2> three{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_ERROR_KIND(coverage_rate(build_search_graph(three, std::vector<double>{})), ErrorKind::TooFewStrokes);
}

TEST(SearchGraph, CollinearStartsCoverNothing) {
  const std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  const SearchGraph g = build_search_graph(line, std::vector<double>{});
  EXPECT_DOUBLE_EQ(coverage_rate(g), 0.0);
  for (double a : g.hull_areas) EXPECT_DOUBLE_EQ(a, 0.0);
}

TEST(SearchGraph, AreasMonotoneAndIncrementsSumProperty) {
  auto rng = make_rng(62);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> pts;
    const int n = 3 + trial % 25;
    for (int i = 0; i < n; ++i) {
      const Vec3 r = random_vec3(rng, 10);
      pts.push_back({r.x, r.y});
    }
    const SearchGraph g = build_search_graph(pts, std::vector<double>{});
    for (std::size_t i = 1; i < g.hull_areas.size(); ++i) EXPECT_GE(g.hull_areas[i], g.hull_areas[i - 1]);
    const auto inc = hull_increments(g);
    EXPECT_NEAR(std::accumulate(inc.begin(), inc.end(), 0.0), g.hull_areas.back(), 1e-9);
    EXPECT_NEAR(g.hull_areas.back(), convex_hull_area(pts), 1e-9);
  }
}

TEST(SearchGraph, CoverageRigidInvariantAndQuadraticInScaleProperty) {
  auto rng = make_rng(63);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 12; ++i) {
      const Vec3 r = random_vec3(rng, 10);
      pts.push_back({r.x, r.y});
    }
    const double a = angle(rng);
    const Vec2 shift{3.0 * a, -2.0};
    std::vector<Vec2> moved;
    std::vector<Vec2> scaled;
    for (const Vec2& p : pts) {
      moved.push_back(Vec2{std::cos(a) * p.x - std::sin(a) * p.y, std::sin(a) * p.x + std::cos(a) * p.y} + shift);
      scaled.push_back(p * 3.0);
    }
    const double cr = coverage_rate(build_search_graph(pts, std::vector<double>{}));
    EXPECT_NEAR(coverage_rate(build_search_graph(moved, std::vector<double>{})), cr, 1e-9 * (1 + cr));
    EXPECT_NEAR(coverage_rate(build_search_graph(scaled, std::vector<double>{})), 9.0 * cr, 1e-9 * (1 + cr));
  }
}

TEST(TrialFeatures, ComponentwiseMedianAndStrokeSum) {
  const std::vector<FeatureVector> subs{{1, 10, 100, 8}, {3, 30, 300, 9}, {2, 20, 200, 10}};
  const FeatureVector fv = trial_features(subs);
  EXPECT_EQ(fv, (FeatureVector{2, 20, 200, 27}));
  const std::vector<FeatureVector> pair{{1, 10, 100, 8}, {3, 30, 300, 9}};
  EXPECT_EQ(trial_features(pair), (FeatureVector{2, 20, 200, 17}));
  EXPECT_ERROR_KIND(trial_features({}), ErrorKind::AllExcluded);
}

TEST(Subtrial, SawtoothTraceGivesFeatures) {
  const SubtrialResult r = subtrial_features(sawtooth_subtrial(12), flat_registration(), {}, {});
  ASSERT_FALSE(r.excluded());
  EXPECT_EQ(r.strokes.size(), 12u);
  EXPECT_EQ(r.features->n_strokes, 12u);
  EXPECT_EQ(r.curvatures.size(), 12u);
  // identical strokes: no local variation
  EXPECT_NEAR(r.features->scc, 0.0, 1e-6);
  EXPECT_NEAR(r.features->sdc, 0.0, 1e-12);
  ASSERT_TRUE(r.graph.has_value());
  EXPECT_EQ(r.graph->size(), 12u);
}

TEST(Subtrial, FewStrokesAreExcludedNotErrors) {
  FeatureConfig cfg;
  cfg.min_strokes = 7;
  const SubtrialResult r = subtrial_features(sawtooth_subtrial(5), flat_registration(), {}, cfg);
  EXPECT_TRUE(r.excluded());
  EXPECT_EQ(r.strokes.size(), 5u);
  EXPECT_TRUE(r.graph.has_value());
}

TEST(Subtrial, ObservationsCarryCurvatureDurationAndIncrement) {
  const SubtrialResult r = subtrial_features(sawtooth_subtrial(9), flat_registration(), {}, {});
  const auto obs = stroke_observations(r);
  ASSERT_EQ(obs.size(), r.strokes.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    EXPECT_EQ(obs[i][0], r.curvatures[i]);
    EXPECT_EQ(obs[i][1], r.durations[i]);
    sum += obs[i][2];
  }
  EXPECT_NEAR(sum, r.graph->hull_areas.back(), 1e-9);
  EXPECT_TRUE(stroke_observations(SubtrialResult{}).empty());
}
