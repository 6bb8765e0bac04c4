#pragma once

#include <Eigen/Core>

namespace lt3d {

struct OneClassSvmConfig {
  double nu = 0.1;
  double gamma = 1.0;  // RBF kernel exp(-gamma |a - b|^2)
  double tolerance = 1e-3;
  long max_iterations = 10'000'000;
};

/// Support vectors of a one-class SVM with an RBF kernel. Coefficients are
/// scaled to sum to one; decision(x) = sum_i alpha_i k(sv_i, x) - rho.
struct OneClassSvm {
  Eigen::Matrix3Xd support_vectors;
  Eigen::VectorXd alpha;
  double rho = 0.0;
  double gamma = 1.0;

  double decision(const Eigen::Vector3d& x) const;
};

/// Solves min 1/2 a^T Q a subject to 0 <= a_i <= 1, sum a = nu * n by SMO
/// with maximal-violating-pair selection. Needs at least 10 points.
OneClassSvm fit_one_class_svm(const Eigen::Matrix3Xd& points, const OneClassSvmConfig& config = {});

}  // namespace lt3d
