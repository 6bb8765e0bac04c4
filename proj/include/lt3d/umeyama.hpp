#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "lt3d/error.hpp"

namespace lt3d {

/// Least-squares rigid motion (rotation + translation, det R = +1) taking the
/// columns of `src` onto the matching columns of `dst`. Throws when the
/// source points are collinear or coincident.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, DerivedA::RowsAtCompileTime + 1, DerivedA::RowsAtCompileTime + 1>
rigid_fit(const Eigen::MatrixBase<DerivedA>& src, const Eigen::MatrixBase<DerivedB>& dst) {
  using Scalar = typename DerivedA::Scalar;
  static_assert(DerivedA::RowsAtCompileTime != Eigen::Dynamic, "point dimension must be fixed");
  if (src.cols() != dst.cols() || src.rows() != dst.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "rigid fit needs matching point sets");
  }
  if (src.cols() < DerivedA::RowsAtCompileTime) {
    throw Error(ErrorCode::kDegenerate, "rigid fit needs at least as many points as dimensions");
  }
  using Points = Eigen::Matrix<Scalar, DerivedA::RowsAtCompileTime, Eigen::Dynamic>;
  const Points centered = src.colwise() - src.rowwise().mean();
  Eigen::JacobiSVD<Points> svd(centered);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(1) <= Scalar(1e-9) * sv(0)) {
    throw Error(ErrorCode::kDegenerate, "rigid fit source points are collinear");
  }
  return Eigen::umeyama(src, dst, false);
}

}  // namespace lt3d
