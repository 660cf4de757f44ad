#include <algorithm>
#include <cmath>
#include <numbers>

#include "test_helpers.hpp"
#include "toolmotion/geometry.hpp"

using namespace toolmotion;
using namespace toolmotion::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Eigenvalues of a symmetric 3x3 matrix from its characteristic polynomial
// (trigonometric solution), descending.
std::array<double, 3> symmetric_eigenvalues(const Mat3& a) {
  const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
  const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) +
                    2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Mat3 b{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
  }
  const double det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                     b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                     b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

// Null vector of (A - lambda I): the largest cross product of two rows.
Vec3 eigenvector(const Mat3& a, double lambda) {
  const Vec3 r0{a[0][0] - lambda, a[0][1], a[0][2]};
  const Vec3 r1{a[1][0], a[1][1] - lambda, a[1][2]};
  const Vec3 r2{a[2][0], a[2][1], a[2][2] - lambda};
  Vec3 best = r0.cross(r1);
  for (const Vec3& c : {r0.cross(r2), r1.cross(r2)}) {
    if (c.norm() > best.norm()) best = c;
  }
  return best.normalized();
}

double naive_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Quaternions and rigid transforms

TEST(Quaternion, RenormalizesOnConstruction) {
  const UnitQuaternion q(2.0, 0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(q.w(), 1.0);
  EXPECT_ERROR_KIND(UnitQuaternion(0.0, 0.0, 0.0, 0.0), ErrorKind::DegenerateInput);
  EXPECT_ERROR_KIND(UnitQuaternion(NAN, 0.0, 0.0, 0.0), ErrorKind::DegenerateInput);
}

TEST(Quaternion, AxisAngleRotatesByHand) {
  const auto q = UnitQuaternion::from_axis_angle({0, 0, 1}, kPi / 2);
  EXPECT_VEC3_NEAR(q.rotate({1, 0, 0}), Vec3(0, 1, 0), 1e-12);
  EXPECT_NEAR(q.angle(), kPi / 2, 1e-12);
}

TEST(Quaternion, MatrixRoundTripProperty) {
  auto rng = make_rng(11);
  for (int i = 0; i < 500; ++i) {
    const UnitQuaternion q = random_rotation(rng);
    const UnitQuaternion back = UnitQuaternion::from_matrix(q.matrix());
    const Vec3 v = random_vec3(rng, 10.0);
    EXPECT_VEC3_NEAR(q.rotate(v), back.rotate(v), 1e-9);
    const Mat3 m = q.matrix();
    const Vec3 mv{m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                  m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    EXPECT_VEC3_NEAR(mv, q.rotate(v), 1e-9);
  }
}

TEST(Quaternion, RotationPreservesLengthProperty) {
  auto rng = make_rng(12);
  for (int i = 0; i < 500; ++i) {
    const Vec3 v = random_vec3(rng, 5.0);
    EXPECT_NEAR(random_rotation(rng).rotate(v).norm(), v.norm(), 1e-9);
  }
}

TEST(Quaternion, SlerpEndpointsAndMidpoint) {
  const auto a = UnitQuaternion::identity();
  const auto b = UnitQuaternion::from_axis_angle({0, 1, 0}, 1.2);
  EXPECT_NEAR((UnitQuaternion::slerp(a, b, 0.0).conjugate() * a).angle(), 0.0, 1e-7);
  EXPECT_NEAR((UnitQuaternion::slerp(a, b, 1.0).conjugate() * b).angle(), 0.0, 1e-7);
  EXPECT_NEAR(UnitQuaternion::slerp(a, b, 0.5).angle(), 0.6, 1e-12);
  // shortest arc: -b is the same rotation
  const UnitQuaternion nb(-b.w(), -b.x(), -b.y(), -b.z());
  EXPECT_NEAR(UnitQuaternion::slerp(a, nb, 0.5).angle(), 0.6, 1e-12);
}

TEST(RigidTransform, InverseAndCompositionProperty) {
  auto rng = make_rng(13);
  for (int i = 0; i < 300; ++i) {
    const RigidTransform a{random_rotation(rng), random_vec3(rng, 50.0)};
    const RigidTransform b{random_rotation(rng), random_vec3(rng, 50.0)};
    const Vec3 p = random_vec3(rng, 20.0);
    EXPECT_VEC3_NEAR(a.inverse().apply(a.apply(p)), p, 1e-9);
    EXPECT_VEC3_NEAR((a * b).apply(p), a.apply(b.apply(p)), 1e-9);
  }
}

TEST(RigidTransform, InterpolateIsLinearInPosition) {
  const RigidTransform a{UnitQuaternion::identity(), {0, 0, 0}};
  const RigidTransform b{UnitQuaternion::from_axis_angle({1, 0, 0}, 1.0), {10, -4, 2}};
  const RigidTransform m = interpolate(a, b, 0.25);
  EXPECT_VEC3_NEAR(m.translation, Vec3(2.5, -1, 0.5), 1e-12);
  EXPECT_NEAR(m.rotation.angle(), 0.25, 1e-12);
}

// ---------------------------------------------------------------------------
// PCA

TEST(Pca, PlanarPointsGiveNormalAsThirdComponent) {
  const std::vector<Vec3> pts{{0, 0, 0}, {3, 1, 0}, {-2, 4, 0}, {5, -3, 0}, {1, 1, 0}};
  const Pca3 pca = pca3(pts);
  EXPECT_NEAR(std::abs(pca.components[2].z), 1.0, 1e-12);
  EXPECT_NEAR(pca.variances[2], 0.0, 1e-12);
}

TEST(Pca, AxisAlignedSymmetry) {
  const std::vector<Vec3> pts{{1, 0, 0}, {-1, 0, 0}, {0, 0.5, 0}, {0, -0.5, 0}};
  const Pca3 pca = pca3(pts);
  EXPECT_VEC3_NEAR(pca.components[0], Vec3(1, 0, 0), 1e-12);
  EXPECT_VEC3_NEAR(pca.components[1], Vec3(0, 1, 0), 1e-12);
}

TEST(Pca, SignConventionLargestEntryPositive) {
  auto rng = make_rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(random_vec3(rng, 3.0));
    const Pca3 pca = pca3(pts);
    for (const Vec3& c : pca.components) {
      const double top = std::max({std::abs(c.x), std::abs(c.y), std::abs(c.z)});
      const double signed_top = std::abs(c.x) == top ? c.x : std::abs(c.y) == top ? c.y : c.z;
      EXPECT_GT(signed_top, 0.0);
    }
  }
}

TEST(Pca, MatchesCharacteristicPolynomialOracle) {
  auto rng = make_rng(15);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const UnitQuaternion rot = random_rotation(rng);
    const Vec3 shift = random_vec3(rng, 30.0);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(rot.rotate({6.0 * n(rng), 3.0 * n(rng), 1.0 * n(rng)}) + shift);

    Vec3 c{};
    for (const Vec3& p : pts) c += p;
    c = c / static_cast<double>(pts.size());
    Mat3 cov{};
    for (const Vec3& p : pts) {
      const std::array<double, 3> d{p.x - c.x, p.y - c.y, p.z - c.z};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) cov[i][j] += d[i] * d[j] / static_cast<double>(pts.size());
      }
    }
    const auto ev = symmetric_eigenvalues(cov);
    const Pca3 pca = pca3(pts);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(pca.variances[k], ev[k], 1e-9 * ev[0]);
      const double cosang = std::abs(pca.components[k].dot(eigenvector(cov, ev[k])));
      EXPECT_LT(std::acos(std::min(1.0, cosang)), 1e-6);
    }
  }
}

TEST(Pca, ComponentsOrthonormalProperty) {
  auto rng = make_rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 3 + trial % 20; ++i) pts.push_back(random_vec3(rng, 1.0 + trial % 7));
    const Pca3 pca = pca3(pts);
    for (int a = 0; a < 3; ++a) {
      EXPECT_NEAR(pca.components[a].norm(), 1.0, 1e-9);
      EXPECT_GE(pca.variances[a], 0.0);
      for (int b = a + 1; b < 3; ++b) EXPECT_NEAR(pca.components[a].dot(pca.components[b]), 0.0, 1e-9);
    }
    EXPECT_GE(pca.variances[0], pca.variances[1]);
    EXPECT_GE(pca.variances[1], pca.variances[2]);
  }
}

TEST(Pca, RejectsDegenerateInput) {
  EXPECT_ERROR_KIND(pca3(std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}}), ErrorKind::DegenerateInput);
  EXPECT_ERROR_KIND(pca3(std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {-3, -3, -3}}), ErrorKind::DegenerateInput);
}

// ---------------------------------------------------------------------------
// Convex hull

TEST(ConvexHull, HandComputedAreas) {
  EXPECT_DOUBLE_EQ(convex_hull_area(std::vector<Vec2>{{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 1.0);
  EXPECT_DOUBLE_EQ(convex_hull_area(std::vector<Vec2>{{0, 0}, {4, 0}, {0, 3}}), 6.0);
  EXPECT_EQ(convex_hull_area(std::vector<Vec2>{}), 0.0);
  EXPECT_EQ(convex_hull_area(std::vector<Vec2>{{1, 1}, {1, 1}, {1, 1}}), 0.0);
  EXPECT_EQ(convex_hull_area(std::vector<Vec2>{{0, 0}, {1, 1}, {2, 2}, {5, 5}}), 0.0);
}

TEST(ConvexHull, CounterClockwiseWithoutCollinearVertices) {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {1, 1}, {0, 2}};
  const auto hull = convex_hull(pts);
  ASSERT_EQ(hull.size(), 4u);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    const Vec2& c = hull[(i + 2) % hull.size()];
    EXPECT_GT((b - a).cross(c - b), 0.0);
  }
}

TEST(ConvexHull, PermutationAndRigidMotionInvarianceProperty) {
  auto rng = make_rng(17);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Vec2> pts(3 + trial % 40);
    for (Vec2& p : pts) p = {u(rng), u(rng)};
    const double area = convex_hull_area(pts);

    std::vector<Vec2> shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(convex_hull_area(shuffled), area, 1e-9 * std::max(area, 1.0));

    const double ang = u(rng);
    const Vec2 shift{u(rng), u(rng)};
    std::vector<Vec2> moved;
    for (const Vec2& p : pts) {
      moved.push_back(Vec2{std::cos(ang) * p.x - std::sin(ang) * p.y, std::sin(ang) * p.x + std::cos(ang) * p.y} +
                      shift);
    }
    EXPECT_NEAR(convex_hull_area(moved), area, 1e-9 * std::max(area, 1.0));
  }
}

TEST(ConvexHull, MonotoneUnderAppendProperty) {
  auto rng = make_rng(18);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> pts;
    double prev = 0.0;
    for (int i = 0; i < 30; ++i) {
      pts.push_back({n(rng), n(rng)});
      const double area = convex_hull_area(pts);
      EXPECT_GE(area, prev - 1e-9 * std::max(prev, 1.0));
      prev = area;
    }
  }
}

TEST(ConvexHull, PolygonAreaShoelace) {
  EXPECT_DOUBLE_EQ(polygon_area(std::vector<Vec2>{{0, 0}, {0, 2}, {3, 2}, {3, 0}}), 6.0);
}

// ---------------------------------------------------------------------------
// Filters

TEST(Median, EvenCountTakesMeanOfCentralPair) {
  EXPECT_DOUBLE_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
  EXPECT_DOUBLE_EQ(median(std::vector<double>{7}), 7.0);
  EXPECT_TRUE(std::isnan(median(std::vector<double>{})));
}

TEST(MedianFilter, TruncatedEdgesUseEvenCountRule) {
  const std::vector<double> v{1, 9, 1, 9, 1};
  EXPECT_EQ(median_filter(v, 3), (std::vector<double>{5, 1, 9, 1, 5}));
}

TEST(MedianFilter, ConstantVectorUnchanged) {
  const std::vector<double> v(9, 2.5);
  EXPECT_EQ(median_filter(v, 5), v);
}

TEST(MedianFilter, RejectsBadWindows) {
  const std::vector<double> v{1, 2, 3};
  EXPECT_ERROR_KIND(median_filter(v, 4), ErrorKind::BadWindow);
  EXPECT_ERROR_KIND(median_filter(v, 0), ErrorKind::BadWindow);
  EXPECT_ERROR_KIND(median_filter(v, -3), ErrorKind::BadWindow);
}

TEST(MedianFilter, MatchesNaiveSortOracleProperty) {
  auto rng = make_rng(19);
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_int_distribution<int> half(0, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_values(rng, static_cast<std::size_t>(len(rng)));
    const int w = 2 * half(rng) + 1;
    const auto out = median_filter(v, w);
    ASSERT_EQ(out.size(), v.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      std::vector<double> win;
      for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - w / 2); j <= std::min(n - 1, i + w / 2); ++j) {
        win.push_back(v[j]);
      }
      ASSERT_EQ(out[i], naive_median(win));
    }
  }
}

TEST(MovingAverage, HandArithmetic) {
  EXPECT_EQ(moving_average(std::vector<double>{0, 3, 0}, 3), (std::vector<double>{1.5, 1, 1.5}));
  const std::vector<double> v{1, 2, 4};
  EXPECT_EQ(moving_average(v, 1), v);
  EXPECT_ERROR_KIND(moving_average(v, 0), ErrorKind::BadWindow);
}

TEST(MovingAverage, MatchesNaiveSlidingSumProperty) {
  auto rng = make_rng(20);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_int_distribution<int> win(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_values(rng, static_cast<std::size_t>(len(rng)));
    const int w = win(rng);
    const auto out = moving_average(v, w);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - (w - 1) / 2);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + w / 2);
      double sum = 0.0;
      for (std::ptrdiff_t j = lo; j <= hi; ++j) sum += v[j];
      ASSERT_EQ(out[i], sum / static_cast<double>(hi - lo + 1));
    }
  }
}

TEST(MovingAverage, Vec3MatchesComponentwise) {
  auto rng = make_rng(21);
  std::vector<Vec3> pts;
  std::vector<double> xs;
  for (int i = 0; i < 40; ++i) {
    pts.push_back(random_vec3(rng));
    xs.push_back(pts.back().x);
  }
  const auto a = moving_average(pts, 5);
  const auto b = moving_average(xs, 5);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(a[i].x, b[i]);
}

// ---------------------------------------------------------------------------
// Planes

TEST(Plane, SignedDistanceByHand) {
  const Plane z0({0, 0, 0}, {0, 0, 2});
  EXPECT_DOUBLE_EQ(point_plane_distance({5, 5, 2}, z0), 2.0);
  EXPECT_DOUBLE_EQ(point_plane_distance({5, -1, 0}, z0), 0.0);
  EXPECT_ERROR_KIND(Plane({0, 0, 0}, {0, 0, 0}), ErrorKind::DegenerateInput);
}

TEST(Plane, DistanceMatchesDirectFormulaProperty) {
  auto rng = make_rng(22);
  for (int i = 0; i < 500; ++i) {
    const Vec3 point = random_vec3(rng, 10.0);
    const Vec3 normal = random_vec3(rng, 3.0);
    const Vec3 p = random_vec3(rng, 20.0);
    const Plane plane(point, normal);
    const double oracle = (p - point).dot(normal) / normal.norm();
    EXPECT_NEAR(point_plane_distance(p, plane), oracle, 1e-9);
    // moving the anchor within the plane changes nothing
    const Vec3 in_plane = normal.cross(random_vec3(rng));
    EXPECT_NEAR(point_plane_distance(p, Plane(point + in_plane, normal)), oracle, 1e-9);
  }
}

TEST(Plane, ProjectionByHand) {
  const Plane z0({0, 0, 0}, {0, 0, 1});
  const PlaneBasis xy{{1, 0, 0}, {0, 1, 0}};
  EXPECT_EQ(project_to_plane({3, 4, 7}, z0, xy), Vec2(3, 4));
  EXPECT_EQ(project_to_plane(z0.point(), z0, xy), Vec2(0, 0));
  EXPECT_ERROR_KIND(project_to_plane({1, 1, 1}, z0, PlaneBasis{{1, 0, 0}, {1, 1, 0}}), ErrorKind::BadBasis);
  EXPECT_ERROR_KIND(project_to_plane({1, 1, 1}, z0, PlaneBasis{{1, 0, 0}, {0, 0, 1}}), ErrorKind::BadBasis);
}

TEST(Plane, ProjectionRoundTripPythagorasProperty) {
  auto rng = make_rng(23);
  for (int i = 0; i < 500; ++i) {
    const Vec3 n = random_vec3(rng).normalized();
    const Vec3 u = n.cross(random_vec3(rng)).normalized();
    const Vec3 v = n.cross(u);
    const Plane plane(random_vec3(rng, 10.0), n);
    const PlaneBasis basis{u, v};
    const Vec3 p = random_vec3(rng, 25.0);
    const Vec3 lifted = lift_from_plane(project_to_plane(p, plane, basis), plane, basis);
    EXPECT_NEAR(distance(lifted, p), std::abs(point_plane_distance(p, plane)), 1e-9);
  }
}

TEST(Plane, RotatePlaneAboutInPlaneAxis) {
  const Plane z0({0, 0, 0}, {0, 0, 1});
  const Plane r = rotate_plane(z0, {0, 0, 0}, {1, 0, 0}, kPi / 2);
  EXPECT_VEC3_NEAR(r.normal(), Vec3(0, -1, 0), 1e-12);
  EXPECT_NEAR(angle_between({1, 0, 0}, {0, 3, 0}), kPi / 2, 1e-12);
}
