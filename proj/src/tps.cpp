#include "lt3d/tps.hpp"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>

#include "lt3d/error.hpp"

namespace lt3d {

double tps_kernel(double r, int dim) {
  switch (dim) {
    case 2:
      return r > 0 ? r * r * std::log(r) : 0.0;
    case 3:
      return -r;
    default:
      throw Error(ErrorCode::kInvalidArgument, "thin-plate kernel defined for 2D and 3D only");
  }
}

Eigen::MatrixXd tps_kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int dim = static_cast<int>(a.cols());
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = tps_kernel((a.row(i) - b.row(j)).norm(), dim);
  }
  return k;
}

Eigen::MatrixXd homogeneous_rows(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd out(points.rows(), points.cols() + 1);
  out << points, Eigen::VectorXd::Ones(points.rows());
  return out;
}

Eigen::MatrixXd TpsParams::apply(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd out = homogeneous_rows(points) * d;
  if (w.size() > 0) out += tps_kernel_matrix(points, controls) * w;
  return out;
}

double TpsParams::bending_energy() const {
  if (w.size() == 0) return 0.0;
  return (w.transpose() * tps_kernel_matrix(controls, controls) * w).trace();
}

TpsParams tps_fit(const Eigen::MatrixXd& controls, const Eigen::MatrixXd& values, double lambda) {
  const Eigen::Index k = controls.rows();
  const Eigen::Index a = controls.cols() + 1;
  if (values.rows() != k) throw Error(ErrorCode::kInvalidArgument, "controls and values differ in count");
  if (k < a) throw Error(ErrorCode::kDegenerate, "too few control points for the affine part");

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k + a, k + a);
  l.topLeftCorner(k, k) = tps_kernel_matrix(controls, controls);
  l.topLeftCorner(k, k).diagonal().array() += lambda;
  const Eigen::MatrixXd p = homogeneous_rows(controls);
  l.topRightCorner(k, a) = p;
  l.bottomLeftCorner(a, k) = p.transpose();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k + a, values.cols());
  rhs.topRows(k) = values;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(l);
  if (!lu.isInvertible()) throw Error(ErrorCode::kDegenerate, "control points are affinely dependent");
  const Eigen::MatrixXd sol = lu.solve(rhs);
  return {controls, sol.bottomRows(a), sol.topRows(k)};
}

TpsParams tps_fit_rpm(const Eigen::MatrixXd& controls, const Eigen::MatrixXd& targets, double lambda1,
                      double lambda2) {
  const Eigen::Index k = controls.rows();
  const Eigen::Index a = controls.cols() + 1;
  if (targets.rows() != k || targets.cols() != a) {
    throw Error(ErrorCode::kInvalidArgument, "targets must be homogeneous rows matching the controls");
  }
  if (k < a) throw Error(ErrorCode::kDegenerate, "too few control points for the affine part");

  const Eigen::MatrixXd p = homogeneous_rows(controls);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(p);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a).triangularView<Eigen::Upper>();
  if (r.diagonal().cwiseAbs().minCoeff() <= 1e-12 * r.diagonal().cwiseAbs().maxCoeff()) {
    throw Error(ErrorCode::kDegenerate, "control points are affinely dependent");
  }
  const auto q1 = q.leftCols(a);
  const auto q2 = q.rightCols(k - a);

  const Eigen::MatrixXd phi = tps_kernel_matrix(controls, controls);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, a);
  if (k > a) {
    Eigen::MatrixXd lhs = q2.transpose() * phi * q2;
    lhs.diagonal().array() += lambda1;
    w = q2 * lhs.ldlt().solve(q2.transpose() * targets);
  }
  Eigen::MatrixXd lhs = r.transpose() * r;
  lhs.diagonal().array() += lambda2;
  const Eigen::MatrixXd rhs =
      r.transpose() * q1.transpose() * (targets - phi * w) + lambda2 * Eigen::MatrixXd::Identity(a, a);
  return {controls, lhs.ldlt().solve(rhs), w};
}

}  // namespace lt3d
