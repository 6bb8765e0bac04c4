#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "lt3d/camera.hpp"
#include "lt3d/image.hpp"
#include "lt3d/ocsvm.hpp"

namespace lt3d {

/// Points recovered from a depth image. `pixels` holds (col, row, z) with the
/// raster origin at the top-left; `world` the back-projected positions.
struct DepthPoints {
  Eigen::Matrix3Xd pixels;
  Eigen::Matrix3Xd world;
};

/// Decoded normalised depth at or above this is background.
inline constexpr double kFarThreshold = 0.999;
inline constexpr double kSnapCropOffset = 0.15;

/// Decodes every pixel, drops background and zero depths and back-projects
/// the rest. `k` is rescaled to the image size when they differ.
DepthPoints depth_to_points(const RgbaImage& depth, const Intrinsics& k, const Extrinsics& e);

/// Scene points inside the element's bounding box grown by `offset` on every
/// side. Throws kNothingToSnap when none remain.
Eigen::Matrix3Xd reduce_points(const Eigen::Matrix3Xd& scene, const Eigen::Matrix3Xd& element,
                               double offset = kSnapCropOffset);

/// Isotropic Gaussian mixture with a shared variance.
struct MixtureModel {
  Eigen::Matrix3Xd means;
  Eigen::VectorXd weights;
  double variance = 1.0;

  Eigen::Index size() const { return means.cols(); }
  double density(const Eigen::Vector3d& x) const;
};

/// One component per support vector, weighted by its coefficient, with
/// variance 1 / (2 gamma).
MixtureModel svm_to_gmm(const OneClassSvm& svm);

/// Rigid parameters (qw, qx, qy, qz, tx, ty, tz); the quaternion need not be
/// unit length and is normalised before use.
using RigidParams = Eigen::Matrix<double, 7, 1>;

RigidParams identity_params();
Eigen::Matrix4d params_to_matrix(const RigidParams& theta);

struct L2Value {
  double value = 0.0;
  RigidParams gradient = RigidParams::Zero();
};

/// Squared L2 distance between `a` and `b` moved by theta, in closed form,
/// together with its gradient in theta.
L2Value l2_distance(const MixtureModel& a, const MixtureModel& b, const RigidParams& theta);

/// Squared L2 norm of a mixture.
double l2_self(const MixtureModel& m);

struct SnapConfig {
  double nu = 0.1;
  double kernel_scale = 0.25;  // sigma = kernel_scale * crop diagonal
  int refine_levels = 4;       // extra passes, each halving sigma
  double crop_offset = kSnapCropOffset;
  int max_points = 2000;
  std::uint64_t seed = 0x5eed;
  int starts = 8;
  double start_angle_deg = 10.0;
  int max_iterations = 300;
  unsigned threads = 0;
};

struct SnapResult {
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();  // applied about the world origin
  double l2 = 0.0;
  int scene_points = 0;
  int element_points = 0;
};

struct MinimizeResult {
  RigidParams theta = RigidParams::Zero();
  double value = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
};

/// BFGS with backtracking line search over the rigid parameters.
MinimizeResult minimize_l2(const MixtureModel& scene, const MixtureModel& element, const RigidParams& start,
                           int max_iterations = 300);

/// Rigid world-space correction that moves the element's depth points onto
/// the scene's.
SnapResult snap(const RgbaImage& scene_depth, const RgbaImage& element_depth, const Intrinsics& k,
                const Extrinsics& e, const SnapConfig& config = {});

/// snap() on already back-projected points.
SnapResult snap_points(const Eigen::Matrix3Xd& scene, const Eigen::Matrix3Xd& element, const SnapConfig& config = {});

}  // namespace lt3d
