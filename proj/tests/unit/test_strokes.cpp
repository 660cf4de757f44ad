#include <cmath>

#include "test_helpers.hpp"
#include "toolmotion/strokes.hpp"

using namespace toolmotion;
using namespace toolmotion::testing;

namespace {

const Plane kPlane({0, 0, 0}, {0, 0, 1});
const PlaneBasis kBasis{{1, 0, 0}, {0, 1, 0}};

/// Sawtooth strokes at 40 Hz: each climbs linearly from the plane to `height`
/// over `up` seconds while advancing 8 mm in x, then returns over `down` seconds.
Trajectory sawtooth(int n_strokes, double height, double up = 0.7, double down = 0.5, double x0 = 0.0) {
  Trajectory tips;
  const double dt = 1.0 / 40.0;
  double t = 0.0;
  double x = x0;
  for (int k = 0; k < n_strokes; ++k) {
    const int n_up = static_cast<int>(std::lround(up / dt));
    const int n_down = static_cast<int>(std::lround(down / dt));
    for (int i = 0; i < n_up; ++i, t += dt) {
      const double s = static_cast<double>(i) / n_up;
      tips.push_back({t, {x + 8.0 * s, 2.0 * k, height * s}});
    }
    for (int i = 0; i < n_down; ++i, t += dt) {
      const double s = static_cast<double>(i) / n_down;
      tips.push_back({t, {x + 8.0, 2.0 * k, height * (1.0 - s)}});
    }
    x += 1.0;
  }
  tips.push_back({t, {x, 2.0 * n_strokes, 0.0}});
  return tips;
}

std::vector<Extremum> naive_extrema(const std::vector<double>& v) {
  std::vector<Extremum> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool left_lower = i == 0 || v[i - 1] < v[i];
    const bool right_lower = i + 1 == v.size() || v[i + 1] < v[i];
    const bool left_higher = i == 0 || v[i - 1] > v[i];
    const bool right_higher = i + 1 == v.size() || v[i + 1] > v[i];
    if (v.size() < 2) continue;
    if (left_higher && right_higher) out.push_back({i, false});
    if (left_lower && right_lower) out.push_back({i, true});
  }
  return out;
}

}  // namespace

TEST(StrokeConfig, DefaultWindowIsOddQuarterSecond) {
  EXPECT_EQ(default_smooth_window(40.0), 11);
  EXPECT_EQ(default_smooth_window(48.0), 13);
  EXPECT_EQ(default_smooth_window(100.0), 25);
  EXPECT_EQ(default_smooth_window(8.0), 3);
  EXPECT_EQ(default_smooth_window(0.0), 3);
  for (int rate = 1; rate < 500; ++rate) EXPECT_EQ(default_smooth_window(rate) % 2, 1);
}

TEST(StrokeConfig, ResolveUsesMedianSampleRate) {
  StrokeConfig cfg;
  EXPECT_EQ(resolve_smooth_window(cfg, sawtooth(2, 10)), 11);
  cfg.smooth_window = 5;
  EXPECT_EQ(resolve_smooth_window(cfg, sawtooth(2, 10)), 5);
}

TEST(StrokeConfig, InvalidGatesRejected) {
  StrokeConfig cfg;
  cfg.smooth_window = -1;
  EXPECT_ERROR_KIND(cfg.validate(), ErrorKind::BadWindow);
  cfg = {};
  cfg.min_duration = 4.0;
  EXPECT_ERROR_KIND(cfg.validate(), ErrorKind::BadProfile);
  cfg = {};
  cfg.min_length = 0.0;
  EXPECT_ERROR_KIND(cfg.validate(), ErrorKind::BadProfile);
  cfg = {};
  cfg.min_prominence = -1.0;
  EXPECT_ERROR_KIND(cfg.validate(), ErrorKind::BadProfile);
}

TEST(Extrema, HandExamples) {
  EXPECT_EQ(local_extrema({0, 1, 0}), (std::vector<Extremum>{{0, false}, {1, true}, {2, false}}));
  EXPECT_EQ(local_extrema({0, 2, 2, 0}), (std::vector<Extremum>{{0, false}, {1, true}, {3, false}}));
  EXPECT_EQ(local_extrema({0, 1, 1, 2}), (std::vector<Extremum>{{0, false}, {3, true}}));
  EXPECT_TRUE(local_extrema({3, 3, 3}).empty());
  EXPECT_TRUE(local_extrema({5}).empty());
  EXPECT_TRUE(local_extrema({}).empty());
}

TEST(Extrema, DistinctValuesMatchNaiveOracleProperty) {
  auto rng = make_rng(51);
  std::uniform_int_distribution<int> len(2, 40);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_values(rng, static_cast<std::size_t>(len(rng)));
    EXPECT_EQ(local_extrema(v), naive_extrema(v));
  }
}

TEST(Extrema, AlternateBetweenMinimaAndMaximaProperty) {
  auto rng = make_rng(52);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(30);
    for (double& x : v) x = level(rng);
    const auto ex = local_extrema(v);
    for (std::size_t i = 1; i < ex.size(); ++i) {
      EXPECT_NE(ex[i].is_max, ex[i - 1].is_max);
      EXPECT_LT(ex[i - 1].index, ex[i].index);
    }
  }
}

TEST(Polyline, LengthByHand) {
  EXPECT_DOUBLE_EQ(polyline_length({{0, 0, 0}, {3, 4, 0}, {3, 4, 12}}), 17.0);
  EXPECT_DOUBLE_EQ(polyline_length({{1, 1, 1}}), 0.0);
  EXPECT_DOUBLE_EQ(polyline_length({}), 0.0);
}

TEST(Curvature, StraightStrokeIsOneAndClosedLoopIsZeroChord) {
  Stroke s;
  s.path = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  s.path_length = polyline_length(s.path);
  s.chord_length = 2.0;
  EXPECT_DOUBLE_EQ(stroke_curvature(s), 1.0);
  s.chord_length = 0.0;
  EXPECT_ERROR_KIND(stroke_curvature(s), ErrorKind::ZeroChord);
}

TEST(DistanceSignal, UnsignedDistanceOfSmoothedPath) {
  const Trajectory tips{{0, {0, 0, -3}}, {0.1, {0, 0, -3}}, {0.2, {0, 0, -3}}};
  const DistanceSignal sig = distance_signal(tips, kPlane, 3);
  for (double d : sig.distance) EXPECT_DOUBLE_EQ(d, 3.0);
  EXPECT_EQ(sig.t, (std::vector<double>{0, 0.1, 0.2}));
}

TEST(Detect, SawtoothYieldsOneStrokePerClimb) {
  const auto strokes = detect_strokes(sawtooth(10, 15.0), kPlane, kBasis, {4, 10, 0}, StrokeConfig{});
  ASSERT_EQ(strokes.size(), 10u);
  for (std::size_t k = 0; k < strokes.size(); ++k) {
    const Stroke& s = strokes[k];
    EXPECT_NEAR(s.duration, 0.7, 0.051) << k;
    EXPECT_GT(s.peak_distance, 10.0);
    EXPECT_NEAR(s.start_point_2d.y, 2.0 * static_cast<double>(k), 1.0);
    EXPECT_EQ(s.path.size(), s.end_idx - s.start_idx + 1);
    EXPECT_NEAR(s.duration, s.end_t - s.start_t, 1e-12);
    EXPECT_GE(stroke_curvature(s), 1.0);
    EXPECT_TRUE(passes_gates(s, {4, 10, 0}, StrokeConfig{}));
  }
}

TEST(Detect, GatesRemoveStrokes) {
  const Trajectory tips = sawtooth(6, 15.0);
  const Vec3 center{4, 6, 0};
  StrokeConfig cfg;
  EXPECT_EQ(detect_strokes(tips, kPlane, kBasis, center, cfg).size(), 6u);

  cfg.min_duration = 1.0;
  EXPECT_TRUE(detect_strokes(tips, kPlane, kBasis, center, cfg).empty());
  cfg = {};
  cfg.max_duration = 0.3;
  cfg.min_duration = 0.1;
  EXPECT_TRUE(detect_strokes(tips, kPlane, kBasis, center, cfg).empty());
  cfg = {};
  cfg.min_length = 100.0;
  EXPECT_TRUE(detect_strokes(tips, kPlane, kBasis, center, cfg).empty());
  cfg = {};
  EXPECT_TRUE(detect_strokes(tips, kPlane, kBasis, {500, 0, 0}, cfg).empty());
  cfg.min_prominence = 50.0;
  EXPECT_TRUE(detect_strokes(tips, kPlane, kBasis, center, cfg).empty());
}

TEST(Detect, TinyWigglesAreNotStrokes) {
  EXPECT_TRUE(detect_strokes(sawtooth(8, 0.5), kPlane, kBasis, {4, 8, 0}, StrokeConfig{}).empty());
}

TEST(Detect, ShortInputGivesNoStrokes) {
  Trajectory tips;
  for (int i = 0; i < 15; ++i) tips.push_back({i * 0.025, {0, 0, i % 2 == 0 ? 0.0 : 10.0}});
  EXPECT_TRUE(detect_strokes(tips, kPlane, kBasis, {0, 0, 0}, StrokeConfig{}).empty());
}

TEST(Detect, RigidMotionOfSceneKeepsStrokesProperty) {
  auto rng = make_rng(53);
  const Trajectory base = sawtooth(8, 15.0);
  const auto reference = detect_strokes(base, kPlane, kBasis, {4, 8, 0}, StrokeConfig{});
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform m{random_rotation(rng), random_vec3(rng, 40)};
    Trajectory moved = base;
    for (TimedPoint& p : moved) p.p = m.apply(p.p);
    const Plane plane(m.apply(kPlane.point()), m.rotation.rotate(kPlane.normal()));
    const PlaneBasis basis{m.rotation.rotate(kBasis.u), m.rotation.rotate(kBasis.v)};
    const auto strokes = detect_strokes(moved, plane, basis, m.apply({4, 8, 0}), StrokeConfig{});
    ASSERT_EQ(strokes.size(), reference.size());
    for (std::size_t k = 0; k < strokes.size(); ++k) {
      EXPECT_EQ(strokes[k].start_idx, reference[k].start_idx);
      EXPECT_EQ(strokes[k].end_idx, reference[k].end_idx);
      EXPECT_NEAR(strokes[k].path_length, reference[k].path_length, 1e-9);
      EXPECT_NEAR(strokes[k].start_point_2d.x, reference[k].start_point_2d.x, 1e-9);
      EXPECT_NEAR(strokes[k].start_point_2d.y, reference[k].start_point_2d.y, 1e-9);
    }
  }
}
