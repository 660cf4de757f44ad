#include "toolmotion/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

#include "toolmotion/error.hpp"

namespace toolmotion {

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::DegenerateInput, "cannot normalize a zero or non-finite vector");
  }
  return *this / n;
}

double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate for nearly parallel vectors
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// ---------------------------------------------------------------------------
// UnitQuaternion
// ---------------------------------------------------------------------------

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n2 = w * w + x * x + y * y + z * z;
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw Error(ErrorKind::DegenerateInput, "quaternion with zero or non-finite norm");
  }
  // already unit to rounding: keep the exact components so serialization round-trips
  const double n = std::abs(n2 - 1.0) <= 1e-15 ? 1.0 : std::sqrt(n2);
  w_ = w / n;
  x_ = x / n;
  y_ = y / n;
  z_ = z / n;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x * s, a.y * s, a.z * s};
}

UnitQuaternion UnitQuaternion::from_matrix(const Mat3& m) {
  const double trace = m[0][0] + m[1][1] + m[2][2];
  if (trace > 0.0) {
    const double s = 0.5 / std::sqrt(trace + 1.0);
    return {0.25 / s, (m[2][1] - m[1][2]) * s, (m[0][2] - m[2][0]) * s, (m[1][0] - m[0][1]) * s};
  }
  if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]);
    return {(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s};
  }
  if (m[1][1] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]);
    return {(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s};
  }
  const double s = 2.0 * std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]);
  return {(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s};
}

UnitQuaternion UnitQuaternion::conjugate() const {
  UnitQuaternion q;
  q.w_ = w_;
  q.x_ = -x_;
  q.y_ = -y_;
  q.z_ = -z_;
  return q;
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
  return {w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
          w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
          w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
          w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_};
}

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
  // v' = v + 2w (q x v) + 2 q x (q x v)
  const Vec3 q(x_, y_, z_);
  const Vec3 t = q.cross(v) * 2.0;
  return v + t * w_ + q.cross(t);
}

Mat3 UnitQuaternion::matrix() const {
  const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  return {{{ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy)},
           {2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx)},
           {2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz}}};
}

double UnitQuaternion::angle() const {
  const double v = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  return 2.0 * std::atan2(v, std::abs(w_));
}

UnitQuaternion UnitQuaternion::slerp(const UnitQuaternion& a, const UnitQuaternion& b, double s) {
  double bw = b.w_, bx = b.x_, by = b.y_, bz = b.z_;
  double d = a.w_ * bw + a.x_ * bx + a.y_ * by + a.z_ * bz;
  if (d < 0.0) {
    d = -d;
    bw = -bw;
    bx = -bx;
    by = -by;
    bz = -bz;
  }
  double ka = 1.0 - s;
  double kb = s;
  if (d < 1.0 - 1e-12) {
    const double theta = std::acos(std::min(d, 1.0));
    const double sin_theta = std::sin(theta);
    ka = std::sin((1.0 - s) * theta) / sin_theta;
    kb = std::sin(s * theta) / sin_theta;
  }
  return {ka * a.w_ + kb * bw, ka * a.x_ + kb * bx, ka * a.y_ + kb * by, ka * a.z_ + kb * bz};
}

// ---------------------------------------------------------------------------
// RigidTransform
// ---------------------------------------------------------------------------

RigidTransform RigidTransform::inverse() const {
  const UnitQuaternion inv = rotation.conjugate();
  return {inv, -inv.rotate(translation)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& o) const {
  return {rotation * o.rotation, rotation.rotate(o.translation) + translation};
}

RigidTransform interpolate(const RigidTransform& a, const RigidTransform& b, double s) {
  return {UnitQuaternion::slerp(a.rotation, b.rotation, s),
          a.translation + (b.translation - a.translation) * s};
}

Vec3 rotate_about_axis(const Vec3& p, const Vec3& axis_point, const Vec3& axis_dir, double angle) {
  const UnitQuaternion q = UnitQuaternion::from_axis_angle(axis_dir, angle);
  return q.rotate(p - axis_point) + axis_point;
}

// ---------------------------------------------------------------------------
// Planes
// ---------------------------------------------------------------------------

Plane::Plane(const Vec3& point, const Vec3& normal) : point_(point), normal_(normal.normalized()) {
  if (!point.finite()) throw Error(ErrorKind::DegenerateInput, "plane point is not finite");
}

double point_plane_distance(const Vec3& p, const Plane& plane) {
  return (p - plane.point()).dot(plane.normal());
}

void check_basis(const Plane& plane, const PlaneBasis& basis) {
  constexpr double tol = 1e-6;
  const Vec3& n = plane.normal();
  if (std::abs(basis.u.norm() - 1.0) > tol || std::abs(basis.v.norm() - 1.0) > tol ||
      std::abs(basis.u.dot(basis.v)) > tol || std::abs(basis.u.dot(n)) > tol ||
      std::abs(basis.v.dot(n)) > tol) {
    throw Error(ErrorKind::BadBasis, "in-plane basis is not orthonormal / orthogonal to the normal");
  }
}

Vec2 project_to_plane(const Vec3& p, const Plane& plane, const PlaneBasis& basis) {
  check_basis(plane, basis);
  const Vec3 d = p - plane.point();
  return {d.dot(basis.u), d.dot(basis.v)};
}

Vec3 lift_from_plane(const Vec2& q, const Plane& plane, const PlaneBasis& basis) {
  return plane.point() + basis.u * q.x + basis.v * q.y;
}

Plane rotate_plane(const Plane& plane, const Vec3& axis_point, const Vec3& axis_dir, double angle) {
  const UnitQuaternion q = UnitQuaternion::from_axis_angle(axis_dir, angle);
  return Plane(q.rotate(plane.point() - axis_point) + axis_point, q.rotate(plane.normal()));
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

namespace {

Vec3 canonical_sign(Vec3 v) {
  const double ax = std::abs(v.x), ay = std::abs(v.y), az = std::abs(v.z);
  const double lead = (ax >= ay && ax >= az) ? v.x : (ay >= az ? v.y : v.z);
  return lead < 0.0 ? -v : v;
}

}  // namespace

Pca3 pca3(std::span<const Vec3> points) {
  if (points.size() < 3) {
    throw Error(ErrorKind::DegenerateInput, "pca3 needs at least 3 points");
  }
  Vec3 c;
  for (const Vec3& p : points) c += p;
  c = c / static_cast<double>(points.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& p : points) {
    const Eigen::Vector3d d(p.x - c.x, p.y - c.y, p.z - c.z);
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericFailure, "eigen-decomposition of the covariance failed");
  }
  // Eigen sorts ascending
  const Eigen::Vector3d values = solver.eigenvalues();
  const Eigen::Matrix3d vectors = solver.eigenvectors();

  Pca3 out;
  out.centroid = c;
  for (int k = 0; k < 3; ++k) {
    const int src = 2 - k;
    out.variances[k] = std::max(0.0, values(src));
    out.components[k] = canonical_sign(
        Vec3(vectors(0, src), vectors(1, src), vectors(2, src)).normalized());
  }
  const double scale = std::max(out.variances[0], 1e-300);
  if (out.variances[0] <= 0.0 || out.variances[1] <= 1e-12 * scale) {
    throw Error(ErrorKind::DegenerateInput, "points are coincident or collinear");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convex hull (Andrew's monotone chain)
// ---------------------------------------------------------------------------

namespace {

constexpr double kCollinearTol = 1e-9;

double turn(const Vec2& o, const Vec2& a, const Vec2& b) { return (a - o).cross(b - o); }

}  // namespace

std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], p) <= kCollinearTol) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2& p = pts[i];
    while (k >= lower && turn(hull[k - 2], hull[k - 1], p) <= kCollinearTol) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(std::span<const Vec2> polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += polygon[i].cross(polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * std::abs(twice);
}

double convex_hull_area(std::span<const Vec2> points) {
  const std::vector<Vec2> hull = convex_hull(points);
  return hull.size() < 3 ? 0.0 : polygon_area(hull);
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

double median(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<double> median_filter(std::span<const double> values, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorKind::BadWindow, "median filter window must be odd and >= 1");
  }
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t half = window / 2;
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    out[static_cast<std::size_t>(i)] = median(values.subspan(static_cast<std::size_t>(lo),
                                                             static_cast<std::size_t>(hi - lo + 1)));
  }
  return out;
}

namespace {

template <typename T>
std::vector<T> centered_mean(std::span<const T> values, int window, T zero) {
  if (window < 1) throw Error(ErrorKind::BadWindow, "moving average window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t left = (window - 1) / 2;
  const std::ptrdiff_t right = window / 2;
  std::vector<T> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - left);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + right);
    T sum = zero;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) sum += values[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

std::vector<double> moving_average(std::span<const double> values, int window) {
  return centered_mean(values, window, 0.0);
}

std::vector<Vec3> moving_average(std::span<const Vec3> values, int window) {
  return centered_mean(values, window, Vec3{});
}

}  // namespace toolmotion
