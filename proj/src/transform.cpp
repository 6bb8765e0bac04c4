#include "lt3d/transform.hpp"

#include <Eigen/QR>
#include <cmath>
#include <numbers>

#include "lt3d/camera.hpp"
#include "lt3d/error.hpp"

namespace lt3d {

Eigen::Matrix3d shear_matrix(const Eigen::Vector3d& shear) {
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  h(0, 1) = shear.x();
  h(0, 2) = shear.y();
  h(1, 2) = shear.z();
  return h;
}

Eigen::Matrix4d TrsDecomposition::recompose() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation * scale.asDiagonal() * shear_matrix(shear);
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Eigen::Matrix4d TrsDecomposition::restricted() const {
  return compose_trs(translation, rotation, scale);
}

Eigen::Matrix4d compose_trs(const Eigen::Vector3d& translation, const Eigen::Matrix3d& rotation,
                            const Eigen::Vector3d& scale) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation * scale.asDiagonal();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

TrsDecomposition decompose_trs(const Eigen::Matrix4d& m) {
  const Eigen::Matrix3d a = m.topLeftCorner<3, 3>();
  const double norm = a.norm();
  if (!std::isfinite(norm) || norm == 0.0 || std::abs(a.determinant()) <= 1e-14 * norm * norm * norm) {
    throw Error(ErrorCode::kDegenerate, "linear part of the transform is singular");
  }

  // QR with a positive diagonal on u: a = q * u.
  const Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
  Eigen::Matrix3d q = qr.householderQ();
  Eigen::Matrix3d u = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i) {
    if (u(i, i) < 0) {
      u.row(i) *= -1.0;
      q.col(i) *= -1.0;
    }
  }

  if (q.determinant() < 0) {
    q.col(2) *= -1.0;
    u.row(2) *= -1.0;
  }

  TrsDecomposition d;
  d.translation = m.topRightCorner<3, 1>();
  d.rotation = q;
  d.scale = u.diagonal();
  d.shear = Eigen::Vector3d(u(0, 1) / u(0, 0), u(0, 2) / u(0, 0), u(1, 2) / u(1, 1));
  return d;
}

Pose fit_aabb_cuboid(const Eigen::Matrix3Xd& points) {
  if (points.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot fit a cuboid to an empty point set");
  }
  const Eigen::Vector3d lo = points.rowwise().minCoeff();
  const Eigen::Vector3d hi = points.rowwise().maxCoeff();
  Pose pose;
  pose.position = 0.5 * (lo + hi);
  pose.scale = hi - lo;
  return pose;
}

Pose apply_rigid(const Eigen::Matrix4d& rigid, const Pose& pose) {
  const Eigen::Matrix3d r = rigid.topLeftCorner<3, 3>();
  Pose out = pose;
  out.position = r * pose.position + rigid.topRightCorner<3, 1>();
  out.rotation = Eigen::Quaterniond(r * pose.rotation.toRotationMatrix()).normalized();
  return out;
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::AngleAxisd delta(a.transpose() * b);
  return std::abs(delta.angle()) * 180.0 / std::numbers::pi;
}

bool is_valid_extrinsics(const Extrinsics& e, double tol) {
  const Eigen::Matrix3d r = e.topLeftCorner<3, 3>();
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(r.determinant() - 1.0) > tol) return false;
  return e.row(3) == Eigen::RowVector4d(0, 0, 0, 1);
}

Extrinsics look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d x = up.cross(z);
  if (x.norm() < 1e-12) x = Eigen::Vector3d::UnitX().cross(z);
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Extrinsics e = Extrinsics::Identity();
  e.block<1, 3>(0, 0) = x.transpose();
  e.block<1, 3>(1, 0) = y.transpose();
  e.block<1, 3>(2, 0) = z.transpose();
  e.topRightCorner<3, 1>() = -e.topLeftCorner<3, 3>() * center;
  return e;
}

}  // namespace lt3d
