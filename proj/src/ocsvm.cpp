#include "lt3d/ocsvm.hpp"

#include <cmath>
#include <limits>

#include "lt3d/error.hpp"

namespace lt3d {

double OneClassSvm::decision(const Eigen::Vector3d& x) const {
  const Eigen::VectorXd k = (-gamma * (support_vectors.colwise() - x).colwise().squaredNorm()).array().exp();
  return alpha.dot(k) - rho;
}

OneClassSvm fit_one_class_svm(const Eigen::Matrix3Xd& points, const OneClassSvmConfig& config) {
  const Eigen::Index n = points.cols();
  if (n < 10) throw Error(ErrorCode::kInvalidArgument, "one-class SVM needs at least 10 points");
  if (!(config.nu > 0 && config.nu <= 1)) throw Error(ErrorCode::kInvalidArgument, "nu must lie in (0, 1]");
  if (!(config.gamma > 0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");

  Eigen::MatrixXd q(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    q.col(j) = (-config.gamma * (points.colwise() - points.col(j)).colwise().squaredNorm()).array().exp().transpose();
  }

  // Feasible start: the first floor(nu n) coefficients at the upper bound.
  const double total = config.nu * double(n);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double left = total;
  for (Eigen::Index i = 0; i < n && left > 0; ++i) {
    alpha(i) = std::min(1.0, left);
    left -= alpha(i);
  }
  Eigen::VectorXd grad = q * alpha;

  constexpr double kTau = 1e-12;
  long iter = 0;
  for (;; ++iter) {
    if (iter >= config.max_iterations) throw Error(ErrorCode::kSolverFailure, "one-class SVM did not converge");
    // i may grow (alpha < 1) and has the smallest gradient, j may shrink.
    Eigen::Index i = -1, j = -1;
    double g_min = std::numeric_limits<double>::infinity(), g_max = -g_min;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (alpha(t) < 1 && grad(t) < g_min) g_min = grad(t), i = t;
      if (alpha(t) > 0 && grad(t) > g_max) g_max = grad(t), j = t;
    }
    if (i < 0 || j < 0 || g_max - g_min < config.tolerance) break;
    const double curvature = std::max(q(i, i) + q(j, j) - 2 * q(i, j), kTau);
    double step = (g_max - g_min) / curvature;
    step = std::min({step, 1.0 - alpha(i), alpha(j)});
    alpha(i) += step;
    alpha(j) -= step;
    grad += step * (q.col(i) - q.col(j));
  }

  // rho from the free coefficients, or the midpoint of the feasible range.
  double rho_sum = 0, lo = -std::numeric_limits<double>::infinity(), hi = -lo;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) > 0 && alpha(t) < 1) {
      rho_sum += grad(t);
      ++free;
    } else if (alpha(t) >= 1) {
      lo = std::max(lo, grad(t));
    } else {
      hi = std::min(hi, grad(t));
    }
  }
  double rho = free > 0 ? rho_sum / free : 0.5 * (lo + hi);
  if (!std::isfinite(rho)) rho = std::isfinite(lo) ? lo : hi;

  OneClassSvm svm;
  svm.gamma = config.gamma;
  svm.rho = rho / total;
  Eigen::Index count = (alpha.array() > 0).count();
  svm.support_vectors.resize(3, count);
  svm.alpha.resize(count);
  for (Eigen::Index t = 0, k = 0; t < n; ++t) {
    if (alpha(t) > 0) {
      svm.support_vectors.col(k) = points.col(t);
      svm.alpha(k++) = alpha(t) / total;
    }
  }
  return svm;
}

}  // namespace lt3d
