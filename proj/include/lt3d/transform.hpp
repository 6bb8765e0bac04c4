#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lt3d {

/// Maximum |shear| a restricted (9-DoF) transform may carry.
inline constexpr double kMaxRestrictedSkew = 0.1;

/// Translation, rotation, per-axis scale and the three upper shear
/// coefficients (xy, xz, yz) of an affine 4x4 such that
/// M = T * R * diag(S) * Shear.
struct TrsDecomposition {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Eigen::Vector3d shear = Eigen::Vector3d::Zero();

  /// Largest absolute shear coefficient.
  double skew() const { return shear.cwiseAbs().maxCoeff(); }

  Eigen::Matrix4d recompose() const;

  /// The same transform with the shear dropped: T * R * diag(S).
  Eigen::Matrix4d restricted() const;
};

/// Unit upper-triangular shear matrix with the given (xy, xz, yz) entries.
Eigen::Matrix3d shear_matrix(const Eigen::Vector3d& shear);

/// Gram-Schmidt split of the linear block into rotation * scale * shear.
/// A reflection is folded into a negative z scale. Throws on a singular block.
TrsDecomposition decompose_trs(const Eigen::Matrix4d& m);

/// T * R * diag(S).
Eigen::Matrix4d compose_trs(const Eigen::Vector3d& translation, const Eigen::Matrix3d& rotation,
                            const Eigen::Vector3d& scale);

/// Posed box in world space: centre, orientation and full edge lengths.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();

  /// Object-to-world matrix of the unit cube [-0.5, 0.5]^3.
  Eigen::Matrix4d matrix() const { return compose_trs(position, rotation.toRotationMatrix(), scale); }
};

/// Axis-aligned box spanning a point set, returned as a pose with identity
/// rotation. Throws on an empty set.
Pose fit_aabb_cuboid(const Eigen::Matrix3Xd& points);

/// Applies a homogeneous transform to every column.
inline Eigen::Matrix3Xd transform_points(const Eigen::Matrix4d& m, const Eigen::Matrix3Xd& points) {
  return (m.topLeftCorner<3, 3>() * points).colwise() + m.topRightCorner<3, 1>();
}

/// Pose resulting from left-multiplying a rigid world transform onto `pose`.
Pose apply_rigid(const Eigen::Matrix4d& rigid, const Pose& pose);

/// Angle in degrees between two rotations.
double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace lt3d
