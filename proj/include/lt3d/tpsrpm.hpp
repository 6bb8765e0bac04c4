#pragma once

#include <vector>

#include <Eigen/Core>

#include "lt3d/transform.hpp"

namespace lt3d {

struct AnnealingSchedule {
  double rate = 0.93;
  double final_ratio = 0.01;  // T_final = final_ratio * T0
  int iterations_per_temperature = 5;
  double lambda1 = 1.0;
  double lambda2 = 0.01;
  int sinkhorn_sweeps = 30;
  double sinkhorn_tolerance = 1e-6;
};

struct RepairConfig {
  double early_exit = 0.15;  // stop scheduling work once some c_dist is below
  unsigned threads = 0;      // 0 picks the hardware concurrency
  int max_points = 8;        // N! candidates are enumerated
};

struct RepairStats {
  int evaluated = 0;
  int skipped = 0;
  bool early_exit = false;
};

struct RegistrationResult {
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();  // T * R * diag(S)
  TrsDecomposition decomposition;  // of the unrestricted fit
  double c_dist = 0.0;
  std::vector<int> correspondence;  // source a -> target correspondence[a]
  bool repaired = false;
  RepairStats repair;
};

/// Fuzzy correspondences m_ai = exp(-|x_i - v_a|^2 / 2T) / T, alternately
/// column- and row-normalised until the largest entry change is below the
/// tolerance or the sweep budget runs out. Rows that underflow to zero are
/// reset to uniform.
Eigen::MatrixXd softassign(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x, double temperature,
                           int max_sweeps = 30, double tolerance = 1e-6);

/// Least-squares affine map taking `src` columns onto `dst` columns.
Eigen::Matrix4d fit_affine(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst);

/// RMS distance between m * src and dst over the diagonal of dst's bounding box.
double c_dist(const Eigen::Matrix4d& m, const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst);

/// Fit for fixed correspondences: the affine fit, its decomposition, and its
/// restriction to translation, rotation and positive scale.
RegistrationResult fit_restricted(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst);

/// True when the decomposition is a proper 9-DoF transform: positive scales
/// and skew below kMaxRestrictedSkew.
bool is_restricted(const TrsDecomposition& d);

/// Point matching with deterministic annealing and a thin-plate spline,
/// followed by the skew check and, when it fails, correspondence repair.
/// Needs N = K >= 4 points that are not coplanar.
RegistrationResult tpsrpm(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x,
                          const AnnealingSchedule& schedule = {}, const RepairConfig& repair = {});

/// Tries every one-to-one correspondence concurrently, least sheared first,
/// and keeps the lowest c_dist among restricted fits. Scheduling stops once
/// some c_dist is below the early-exit threshold. Throws
/// kNoRestrictedTransform when no fit is restricted.
RegistrationResult repair_correspondence(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x,
                                         const RepairConfig& config = {});

}  // namespace lt3d
