#pragma once

#include <Eigen/Core>

namespace lt3d {

/// Thin-plate radial basis: r^2 log r in 2D (0 at r = 0), -r in 3D.
double tps_kernel(double r, int dim);

/// Kernel values between the rows of `a` (n x D) and `b` (m x D).
Eigen::MatrixXd tps_kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Rows with a trailing 1 appended.
Eigen::MatrixXd homogeneous_rows(const Eigen::MatrixXd& points);

/// f(p) = [p 1] d + phi(p) w, with phi(p) the kernel values between p and
/// the control points. Points are rows.
struct TpsParams {
  Eigen::MatrixXd controls;  // K x D
  Eigen::MatrixXd d;         // (D+1) x M affine part
  Eigen::MatrixXd w;         // K x M warp coefficients

  Eigen::MatrixXd apply(const Eigen::MatrixXd& points) const;
  /// trace(w^T Phi w).
  double bending_energy() const;
};

/// Regularised interpolating spline through (controls, values): solves
/// [[Phi + lambda I, P], [P^T, 0]] [w; d] = [values; 0] by LU with
/// P = [controls 1]. Throws when the system is singular.
TpsParams tps_fit(const Eigen::MatrixXd& controls, const Eigen::MatrixXd& values, double lambda = 0.0);

/// Fit used inside point matching. Splits the warp from the affine part with
/// a QR factorisation of [controls 1] = [Q1 Q2][R; 0]:
///   gamma = (Q2^T Phi Q2 + lambda1 I)^-1 Q2^T Y,  w = Q2 gamma
///   (R^T R + lambda2 I) d = R^T Q1^T (Y - Phi w) + lambda2 I
/// `targets` holds homogeneous rows (K x (D+1)), so lambda2 pulls d towards
/// the identity.
TpsParams tps_fit_rpm(const Eigen::MatrixXd& controls, const Eigen::MatrixXd& targets, double lambda1,
                      double lambda2);

}  // namespace lt3d
