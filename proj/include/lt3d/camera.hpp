#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/LU>

#include "lt3d/error.hpp"

namespace lt3d {

/// Pinhole intrinsics in pixels of an image of size width x height.
/// Image coordinates put (0,0) at the bottom-left corner with v pointing up.
template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx{1};
  Scalar fy{1};
  Scalar s{0};
  Scalar x0{0};
  Scalar y0{0};
  int width{0};
  int height{0};

  Eigen::Matrix<Scalar, 3, 3> matrix() const {
    Eigen::Matrix<Scalar, 3, 3> k;
    k << fx, s, x0, Scalar(0), fy, y0, Scalar(0), Scalar(0), Scalar(1);
    return k;
  }

  /// Same camera, rescaled to a raster of a different resolution.
  CameraIntrinsics resized(int new_width, int new_height) const {
    const Scalar sx = Scalar(new_width) / Scalar(width);
    const Scalar sy = Scalar(new_height) / Scalar(height);
    return {fx * sx, fy * sy, s * sx, x0 * sx, y0 * sy, new_width, new_height};
  }
};

using Intrinsics = CameraIntrinsics<double>;
using Matrix34 = Eigen::Matrix<double, 3, 4>;

/// World-to-camera [R|t] with bottom row (0,0,0,1).
using Extrinsics = Eigen::Matrix4d;

template <typename Scalar>
void validate(const CameraIntrinsics<Scalar>& k) {
  if (!(k.fx > 0) || !(k.fy > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (k.width <= 0 || k.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  if (k.x0 < 0 || k.x0 > k.width || k.y0 < 0 || k.y0 > k.height) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

/// Checks orthonormality and handedness of the rotation block.
bool is_valid_extrinsics(const Extrinsics& e, double tol = 1e-9);

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 4> projection_matrix(const CameraIntrinsics<Scalar>& k,
                                              const Eigen::Matrix<Scalar, 4, 4>& e) {
  return k.matrix() * e.template topRows<3>();
}

template <typename Scalar>
struct Projection {
  Eigen::Matrix<Scalar, 2, 1> pixel;
  Scalar depth;  // W3: camera-frame z for a K with bottom row (0,0,1)
  bool in_front;
};

template <typename Scalar>
Projection<Scalar> project_point(const Eigen::Matrix<Scalar, 3, 4>& p,
                                 const Eigen::Matrix<Scalar, 3, 1>& world) {
  const Eigen::Matrix<Scalar, 3, 1> w = p * world.homogeneous();
  if (w.z() == Scalar(0)) {
    throw Error(ErrorCode::kDegenerate, "point lies on the camera plane");
  }
  return {w.template head<2>() / w.z(), w.z(), w.z() > Scalar(0)};
}

/// Inverts the pinhole model along the pixel ray: scales K^-1 (u,v,1) by the
/// camera-frame depth z, then maps back to world with the inverse extrinsics.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> back_project(const CameraIntrinsics<Scalar>& k,
                                         const Eigen::Matrix<Scalar, 4, 4>& e,
                                         const Eigen::Matrix<Scalar, 2, 1>& pixel,
                                         Scalar z) {
  if (k.fx == Scalar(0) || k.fy == Scalar(0)) {
    throw Error(ErrorCode::kDegenerate, "singular intrinsics");
  }
  if (!(z > Scalar(0))) {
    throw Error(ErrorCode::kInvalidArgument, "back-projection depth must be positive");
  }
  // K is upper triangular; solve by substitution instead of forming K^-1.
  const Scalar y = (pixel.y() - k.y0) / k.fy;
  const Scalar x = (pixel.x() - k.x0 - k.s * y) / k.fx;
  const Eigen::Matrix<Scalar, 3, 1> cam(x * z, y * z, z);
  const Eigen::Matrix<Scalar, 3, 3> rt = e.template topLeftCorner<3, 3>().transpose();
  return rt * (cam - e.template topRightCorner<3, 1>());
}

/// Camera centre C = -R^T t.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> camera_center(const Eigen::Matrix<Scalar, 4, 4>& e) {
  return -e.template topLeftCorner<3, 3>().transpose() * e.template topRightCorner<3, 1>();
}

/// Synthetic intrinsics from a vertical field of view in degrees.
template <typename Scalar = double>
CameraIntrinsics<Scalar> intrinsics_from_fov(Scalar vertical_fov_deg, int width, int height) {
  if (!(vertical_fov_deg > 0) || !(vertical_fov_deg < 180)) {
    throw Error(ErrorCode::kInvalidArgument, "field of view must lie in (0, 180) degrees");
  }
  const Scalar f = Scalar(height) /
                   (Scalar(2) * std::tan(vertical_fov_deg * (std::numbers::pi_v<Scalar> / Scalar(360))));
  return {f, f, Scalar(0), Scalar(width) / 2, Scalar(height) / 2, width, height};
}

/// Extrinsics of a camera at `center` looking at `target`. The camera frame
/// has x right, y up and z forward, so pixel v grows upward.
Extrinsics look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

/// Image-space centre of raster cell (row, col) in a raster of the given
/// height; rows count from the top, image v from the bottom.
inline Eigen::Vector2d raster_cell_center(int row, int col, int raster_height) {
  return {col + 0.5, raster_height - (row + 0.5)};
}

}  // namespace lt3d
