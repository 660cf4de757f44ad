#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace toolmotion {

// ============================================================================
// Vectors
// ============================================================================

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr double squared_norm() const { return dot(*this); }
  Vec3 normalized() const;
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Unsigned angle between two nonzero vectors, radians.
double angle_between(const Vec3& a, const Vec3& b);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z-component of the 3-D cross product.
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

// ============================================================================
// Rotations and rigid transforms
// ============================================================================

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Unit quaternion, scalar first. Renormalized on construction.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  /// Throws DegenerateInput when the norm is zero or non-finite.
  UnitQuaternion(double w, double x, double y, double z);

  static UnitQuaternion identity() { return {}; }
  /// Rotation of `angle` radians about `axis` (need not be unit length).
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  static UnitQuaternion from_matrix(const Mat3& m);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  UnitQuaternion conjugate() const;
  UnitQuaternion operator*(const UnitQuaternion& o) const;
  Vec3 rotate(const Vec3& v) const;
  Mat3 matrix() const;
  /// Rotation angle in [0, pi].
  double angle() const;

  /// Shortest-arc spherical interpolation, s in [0, 1].
  static UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double s);

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// x_parent = rotation * x_child + translation
struct RigidTransform {
  UnitQuaternion rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  RigidTransform inverse() const;
  /// (this * o).apply(p) == this->apply(o.apply(p))
  RigidTransform operator*(const RigidTransform& o) const;
};

/// Linear position / slerp orientation interpolation, s in [0, 1].
RigidTransform interpolate(const RigidTransform& a, const RigidTransform& b, double s);

Vec3 rotate_about_axis(const Vec3& p, const Vec3& axis_point, const Vec3& axis_dir, double angle);

// ============================================================================
// Planes
// ============================================================================

class Plane {
 public:
  /// Normalizes `normal`; throws DegenerateInput for a zero or non-finite normal.
  Plane(const Vec3& point, const Vec3& normal);

  const Vec3& point() const { return point_; }
  const Vec3& normal() const { return normal_; }
  Plane flipped() const { return Plane(point_, -normal_); }

 private:
  Vec3 point_;
  Vec3 normal_;
};

/// Orthonormal in-plane axes; (u, v, normal) is expected to be right-handed.
struct PlaneBasis {
  Vec3 u;
  Vec3 v;
};

double point_plane_distance(const Vec3& p, const Plane& plane);

/// Coordinates of the orthogonal projection of p in the (u, v) frame anchored at plane.point().
/// Throws BadBasis when the basis is not orthonormal or not orthogonal to the normal (tol 1e-6).
Vec2 project_to_plane(const Vec3& p, const Plane& plane, const PlaneBasis& basis);

/// Inverse of project_to_plane for points lying on the plane.
Vec3 lift_from_plane(const Vec2& q, const Plane& plane, const PlaneBasis& basis);

void check_basis(const Plane& plane, const PlaneBasis& basis);

/// Rotates the plane rigidly about an axis.
Plane rotate_plane(const Plane& plane, const Vec3& axis_point, const Vec3& axis_dir, double angle);

// ============================================================================
// PCA
// ============================================================================

struct Pca3 {
  Vec3 centroid;
  std::array<Vec3, 3> components;  ///< descending variance, orthonormal
  std::array<double, 3> variances;
};

/// Principal components of a 3-D point cloud (population covariance).
/// Each component is sign-flipped so its largest-magnitude entry is positive.
/// Throws DegenerateInput for fewer than 3 points or collinear input.
Pca3 pca3(std::span<const Vec3> points);

// ============================================================================
// Convex hull
// ============================================================================

/// Hull vertices in counter-clockwise order without collinear points.
/// Cross products below 1e-9 mm^2 count as collinear.
std::vector<Vec2> convex_hull(std::span<const Vec2> points);

/// Area of the convex hull; 0 for fewer than 3 distinct points or collinear sets.
double convex_hull_area(std::span<const Vec2> points);

/// Shoelace area of a simple polygon (absolute value).
double polygon_area(std::span<const Vec2> polygon);

// ============================================================================
// Filters
// ============================================================================

/// Median; even counts take the mean of the two central values. Empty input is NaN.
double median(std::span<const double> values);

/// Centered running median with windows truncated at the boundaries.
/// Throws BadWindow unless window is odd and >= 1.
std::vector<double> median_filter(std::span<const double> values, int window);

/// Centered running mean with truncated edges. Even windows reach one sample
/// further to the right than to the left. Throws BadWindow if window < 1.
std::vector<double> moving_average(std::span<const double> values, int window);
std::vector<Vec3> moving_average(std::span<const Vec3> values, int window);

}  // namespace toolmotion
