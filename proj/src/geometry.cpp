#include "copse/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace copse::geom {

bool RigidTransform::valid_rotation(double tol) const {
  Eigen::Matrix3d gram = rotation.transpose() * rotation;
  return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix<double, 8, 3> OrientedBox::corners() const {
  Eigen::Matrix<double, 8, 3> out;
  const Eigen::Vector3d h = size.extents / 2.0;
  for (int i = 0; i < 8; ++i) {
    Eigen::Vector3d c((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    out.row(i) = pose.apply(c).transpose();
  }
  return out;
}

std::pair<PointCloud, NormalizationRecord> normalize_cloud(const PointCloud& cloud) {
  const int n = cloud.size();
  if (n < 2) throw DegenerateCloud("normalize_cloud: need at least 2 points");
  NormalizationRecord rec;
  rec.centroid = cloud.pts.colwise().mean().transpose();
  Cloud centered = cloud.pts.rowwise() - rec.centroid.transpose();
  rec.scale = std::sqrt(centered.rowwise().squaredNorm().maxCoeff());
  if (!(rec.scale > 0.0)) throw DegenerateCloud("normalize_cloud: all points coincide");
  return {PointCloud(centered / rec.scale, Frame::normalized), rec};
}

PointCloud denormalize_cloud(const PointCloud& cloud, const NormalizationRecord& rec, Frame frame) {
  Cloud out = cloud.pts * rec.scale;
  out.rowwise() += rec.centroid.transpose();
  return PointCloud(std::move(out), frame);
}

PointCloud fps_sample(const PointCloud& cloud, int k) {
  const int n = cloud.size();
  if (k < 1 || k > n) throw InvalidCount("fps_sample: k must be in [1, N]");
  std::vector<int> chosen;
  chosen.reserve(k);
  std::vector<char> selected(n, 0);
  Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  int cur = 0;
  chosen.push_back(0);
  selected[0] = 1;
  for (int step = 1; step < k; ++step) {
    Eigen::VectorXd d2 = (cloud.pts.rowwise() - cloud.pts.row(cur)).rowwise().squaredNorm();
    min_d2 = min_d2.cwiseMin(d2);
    int arg = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (!selected[i] && min_d2(i) > best) {
        best = min_d2(i);
        arg = i;
      }
    }
    chosen.push_back(arg);
    selected[arg] = 1;
    cur = arg;
  }
  Cloud out(k, 3);
  for (int i = 0; i < k; ++i) out.row(i) = cloud.pts.row(chosen[i]);
  return PointCloud(std::move(out), cloud.frame);
}

RigidTransform umeyama_align(const PointCloud& source, const PointCloud& target) {
  const auto& src = source.pts;
  const auto& tgt = target.pts;
  if (src.rows() != tgt.rows()) throw ShapeMismatch("umeyama_align: point counts differ");
  const int n = static_cast<int>(src.rows());
  if (n < 3) throw RankDeficient("umeyama_align: need at least 3 points");

  const Eigen::RowVector3d mu_s = src.colwise().mean();
  const Eigen::RowVector3d mu_t = tgt.colwise().mean();
  const Eigen::Matrix3d cov =
      ((src.rowwise() - mu_s).transpose() * (tgt.rowwise() - mu_t)) / static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= sv(0) * 1e-12)
    throw RankDeficient("umeyama_align: cross-covariance rank < 2, rotation under-determined");

  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) flip(2, 2) = -1.0;

  RigidTransform rt;
  rt.rotation = svd.matrixV() * flip * svd.matrixU().transpose();
  rt.translation = mu_t.transpose() - rt.rotation * mu_s.transpose();
  return rt;
}

PointCloud reflect_across_plane(const PointCloud& cloud, const SymmetrySpec& spec) {
  if (spec.kind != SymmetrySpec::Kind::reflectional)
    throw WrongSymmetryKind("reflect_across_plane: spec is not reflectional");
  const Eigen::VectorXd d = cloud.pts * spec.direction;
  return PointCloud(cloud.pts - 2.0 * d * spec.direction.transpose(), cloud.frame);
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
  if (angle == std::numbers::pi)
    return 2.0 * axis * axis.transpose() - Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

PointCloud rotate_about_axis(const PointCloud& cloud, const SymmetrySpec& spec, double angle) {
  if (spec.kind != SymmetrySpec::Kind::rotational)
    throw WrongSymmetryKind("rotate_about_axis: spec is not rotational");
  const Eigen::Matrix3d rot = axis_angle(spec.direction, angle);
  return PointCloud(cloud.pts * rot.transpose(), cloud.frame);
}

PointCloud make_symmetric_gt(const PointCloud& cloud, const SymmetrySpec& spec) {
  switch (spec.kind) {
    case SymmetrySpec::Kind::reflectional:
      return reflect_across_plane(cloud, spec);
    case SymmetrySpec::Kind::rotational:
      return rotate_about_axis(cloud, spec, std::numbers::pi);
    default:
      throw NoSymmetry("make_symmetric_gt: spec has no symmetry");
  }
}

double geodesic_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double rotation_error_deg(const RigidTransform& a, const RigidTransform& b, const SymmetrySpec& spec) {
  if (spec.kind == SymmetrySpec::Kind::rotational) {
    const double c = (a.rotation * spec.direction).dot(b.rotation * spec.direction);
    return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  }
  return geodesic_deg(a.rotation, b.rotation);
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector4d q;
  do {
    for (int i = 0; i < 4; ++i) q(i) = rng.gaussian();
  } while (q.norm() < 1e-8);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

}  // namespace copse::geom
