#include "lt3d/tpsrpm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <Eigen/QR>

#include "lt3d/error.hpp"
#include "lt3d/tps.hpp"

namespace lt3d {
namespace {

void check_point_sets(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x) {
  if (v.cols() != x.cols()) throw Error(ErrorCode::kInvalidArgument, "source and target sizes differ");
  if (v.cols() < 4) throw Error(ErrorCode::kDegenerate, "at least four points are needed");
  if (!v.allFinite() || !x.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite coordinates");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(homogeneous_rows(v.transpose()));
  qr.setThreshold(1e-9);
  if (qr.rank() < 4) throw Error(ErrorCode::kDegenerate, "source points are coplanar");
}

Eigen::Matrix3Xd permuted(const Eigen::Matrix3Xd& x, const std::vector<int>& perm) {
  Eigen::Matrix3Xd out(3, x.cols());
  for (Eigen::Index a = 0; a < x.cols(); ++a) out.col(a) = x.col(perm[a]);
  return out;
}

}  // namespace

Eigen::MatrixXd softassign(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x, double temperature,
                           int max_sweeps, double tolerance) {
  if (!(temperature > 0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  const Eigen::Index n = v.cols(), k = x.cols();
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index i = 0; i < k; ++i) {
      m(a, i) = std::exp(-(x.col(i) - v.col(a)).squaredNorm() / (2 * temperature)) / temperature;
    }
    if (!(m.row(a).sum() > 0)) m.row(a).setConstant(1.0 / double(k));
  }
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Eigen::MatrixXd prev = m;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double s = m.col(i).sum();
      if (s > 0) m.col(i) /= s;
    }
    for (Eigen::Index a = 0; a < n; ++a) {
      const double s = m.row(a).sum();
      if (s > 0) {
        m.row(a) /= s;
      } else {
        m.row(a).setConstant(1.0 / double(k));
      }
    }
    if ((m - prev).cwiseAbs().maxCoeff() < tolerance) break;
  }
  return m;
}

Eigen::Matrix4d fit_affine(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  const Eigen::MatrixXd p = homogeneous_rows(src.transpose());
  const Eigen::MatrixXd d = p.colPivHouseholderQr().solve(Eigen::MatrixXd(dst.transpose()));
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topRows<3>() = d.transpose();
  return m;
}

double c_dist(const Eigen::Matrix4d& m, const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  const double diag = (dst.rowwise().maxCoeff() - dst.rowwise().minCoeff()).norm();
  if (!(diag > 0)) throw Error(ErrorCode::kDegenerate, "target points coincide");
  const double rms = std::sqrt((transform_points(m, src) - dst).colwise().squaredNorm().mean());
  return rms / diag;
}

bool is_restricted(const TrsDecomposition& d) {
  return (d.scale.array() > 0).all() && d.skew() < kMaxRestrictedSkew;
}

RegistrationResult fit_restricted(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  RegistrationResult r;
  r.decomposition = decompose_trs(fit_affine(src, dst));
  r.transform = r.decomposition.restricted();
  r.c_dist = c_dist(r.transform, src, dst);
  return r;
}

RegistrationResult tpsrpm(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x, const AnnealingSchedule& schedule,
                          const RepairConfig& repair) {
  check_point_sets(v, x);
  const Eigen::Index n = v.cols();
  const Eigen::MatrixXd vr = v.transpose();
  const Eigen::MatrixXd xh = homogeneous_rows(x.transpose());

  double t0 = 0;
  for (Eigen::Index a = 0; a < n; ++a) t0 = std::max(t0, (x.colwise() - v.col(a)).colwise().squaredNorm().maxCoeff());
  if (!(t0 > 0)) throw Error(ErrorCode::kDegenerate, "all points coincide");

  TpsParams f{vr, Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Zero(n, 4)};
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, 1.0 / double(n));
  const double t_final = t0 * schedule.final_ratio;
  for (double t = t0; t >= t_final; t *= schedule.rate) {
    for (int it = 0; it < schedule.iterations_per_temperature; ++it) {
      const Eigen::Matrix3Xd moved = f.apply(vr).leftCols(3).transpose();
      m = softassign(moved, x, t, schedule.sinkhorn_sweeps, schedule.sinkhorn_tolerance);
      f = tps_fit_rpm(vr, m * xh, schedule.lambda1 * t / t0, schedule.lambda2 * t / t0);
    }
  }

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a) m.row(a).maxCoeff(&perm[a]);
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  const bool bijective = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  if (bijective) {
    try {
      RegistrationResult r = fit_restricted(v, permuted(x, perm));
      r.correspondence = perm;
      if (is_restricted(r.decomposition) && r.c_dist < repair.early_exit) return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
    }
  }
  return repair_correspondence(v, x, repair);
}

RegistrationResult repair_correspondence(const Eigen::Matrix3Xd& v, const Eigen::Matrix3Xd& x,
                                         const RepairConfig& config) {
  check_point_sets(v, x);
  const int n = static_cast<int>(v.cols());
  if (n > config.max_points) throw Error(ErrorCode::kInvalidArgument, "too many points for exhaustive repair");

  std::vector<std::vector<int>> perms;
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));

  // Candidates are scheduled by ascending skew of their unrestricted fit so
  // the early exit favours the least sheared correspondences.
  std::vector<double> rank(perms.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < perms.size(); ++i) {
    try {
      rank[i] = decompose_trs(fit_affine(v, permuted(x, perms[i]))).skew();
    } catch (const Error&) {
    }
  }
  std::vector<std::size_t> order(perms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::atomic<int> evaluated{0};
  std::mutex mutex;
  RegistrationResult best;
  std::size_t best_index = perms.size();
  best.c_dist = std::numeric_limits<double>::infinity();

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= perms.size()) break;
      const std::size_t i = order[slot];
      RegistrationResult r;
      bool ok = false;
      try {
        r = fit_restricted(v, permuted(x, perms[i]));
        ok = is_restricted(r.decomposition);
      } catch (const Error&) {
        ok = false;
      }
      evaluated.fetch_add(1);
      if (!ok) continue;
      r.correspondence = perms[i];
      std::lock_guard lock(mutex);
      if (r.c_dist < best.c_dist || (r.c_dist == best.c_dist && i < best_index)) {
        best = std::move(r);
        best_index = i;
      }
      if (best.c_dist < config.early_exit) stop.store(true);
    }
  };

  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(perms.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (best_index == perms.size()) {
    throw Error(ErrorCode::kNoRestrictedTransform, "no correspondence yields a restricted transform");
  }
  best.repaired = true;
  best.repair.evaluated = evaluated.load();
  best.repair.skipped = static_cast<int>(perms.size()) - best.repair.evaluated;
  best.repair.early_exit = stop.load();
  return best;
}

}  // namespace lt3d
