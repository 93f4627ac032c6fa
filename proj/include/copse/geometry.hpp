#pragma once
// Geometric primitives: cloud normalization, farthest point sampling, rigid
// alignment, symmetry transforms, oriented boxes, and rotation error measures.

#include <Eigen/Core>
#include <utility>

#include "copse/common.hpp"

namespace copse::geom {

// One point per row.
using Cloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;

enum class Frame { camera, normalized, object };

struct PointCloud {
  Cloud pts;
  Frame frame{Frame::camera};

  PointCloud() = default;
  explicit PointCloud(Cloud p, Frame f = Frame::camera) : pts(std::move(p)), frame(f) {}
  int size() const { return static_cast<int>(pts.rows()); }
  Eigen::Vector3d point(int i) const { return pts.row(i).transpose(); }
};

// Centroid and scalar factor linking the camera and normalized frames.
struct NormalizationRecord {
  Eigen::Vector3d centroid{Eigen::Vector3d::Zero()};
  double scale{1.0};  // > 0
};

struct RigidTransform {
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
  Eigen::Vector3d translation{Eigen::Vector3d::Zero()};

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Cloud apply(const Cloud& pts) const {
    Cloud out = pts * rotation.transpose();
    out.rowwise() += translation.transpose();
    return out;
  }
  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }
  // Orthonormal with det +1 within tol.
  bool valid_rotation(double tol = 1e-9) const;
};

// Full extents along the object frame axes; all components positive.
struct Size3 {
  Eigen::Vector3d extents{Eigen::Vector3d::Ones()};

  Size3() = default;
  explicit Size3(const Eigen::Vector3d& e) : extents(e) {}
  bool positive() const { return (extents.array() > 0.0).all(); }
  double volume() const { return extents.prod(); }
};

// Reflectional plane or rotational axis through the object-frame origin.
struct SymmetrySpec {
  enum class Kind { none, reflectional, rotational };
  Kind kind{Kind::none};
  Eigen::Vector3d direction{Eigen::Vector3d::UnitY()};  // unit plane normal or axis

  static SymmetrySpec none() { return SymmetrySpec{}; }
  static SymmetrySpec reflectional(const Eigen::Vector3d& plane_normal) {
    return SymmetrySpec{Kind::reflectional, plane_normal.normalized()};
  }
  static SymmetrySpec rotational(const Eigen::Vector3d& axis) {
    return SymmetrySpec{Kind::rotational, axis.normalized()};
  }
};

struct OrientedBox {
  RigidTransform pose;
  Size3 size;

  // Corner i has object-frame coordinates (+-sx/2, +-sy/2, +-sz/2) where bit 0
  // of i selects the x sign, bit 1 the y sign, bit 2 the z sign (set bit = +).
  Eigen::Matrix<double, 8, 3> corners() const;
};

// r = mean(P), d = max ||p - r||, output = (P - r)/d tagged normalized.
// Throws DegenerateCloud when N < 2 or all points coincide.
std::pair<PointCloud, NormalizationRecord> normalize_cloud(const PointCloud& cloud);

// Inverse map p*d + r.
PointCloud denormalize_cloud(const PointCloud& cloud, const NormalizationRecord& rec, Frame frame = Frame::camera);

// Greedy max-min farthest point sampling. Seed is index 0; each next point
// maximizes the minimum distance to the selected set, ties broken by lowest
// index. Returns points in selection order.
PointCloud fps_sample(const PointCloud& cloud, int k);

// Least-squares rotation + translation aligning source onto target
// (point-wise corresponded, unit scale). Reflections are repaired by flipping
// the smallest singular direction. Throws RankDeficient when the
// cross-covariance has rank < 2.
RigidTransform umeyama_align(const PointCloud& source, const PointCloud& target);

// p -> p - 2 (p.n) n for a plane through the origin.
PointCloud reflect_across_plane(const PointCloud& cloud, const SymmetrySpec& spec);

// Rodrigues rotation of every point about the axis. angle == pi is computed
// with the exact half-turn formula 2 a a^T - I so that applying it twice is an
// exact involution.
PointCloud rotate_about_axis(const PointCloud& cloud, const SymmetrySpec& spec, double angle);

// Symmetric counterpart of an object-frame cloud: reflection for reflectional
// specs, a half turn about the axis for rotational specs.
PointCloud make_symmetric_gt(const PointCloud& cloud, const SymmetrySpec& spec);

// Geodesic angle between rotations, in degrees.
double geodesic_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

// Symmetry-aware rotation error in degrees: geodesic angle for none and
// reflectional specs; for rotational specs the angle between the two rotated
// symmetry axes, which ignores spin about the axis.
double rotation_error_deg(const RigidTransform& a, const RigidTransform& b, const SymmetrySpec& spec);

// Rotation matrix for a unit axis and angle (half turns handled exactly).
Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle);

// Uniform random rotation from a normalized Gaussian quaternion.
Eigen::Matrix3d random_rotation(Rng& rng);

}  // namespace copse::geom
