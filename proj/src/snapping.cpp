#include "lt3d/snapping.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

#include <Eigen/Geometry>

#include "lt3d/depth_codec.hpp"
#include "lt3d/error.hpp"
#include "lt3d/transform.hpp"

namespace lt3d {
namespace {

double gauss_overlap(double d2, double s) {
  return std::pow(2 * std::numbers::pi * s, -1.5) * std::exp(-d2 / (2 * s));
}

/// dR/dq_k of the unit-quaternion rotation formula, q = (w, x, y, z).
std::array<Eigen::Matrix3d, 4> rotation_partials(const Eigen::Vector4d& q) {
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  std::array<Eigen::Matrix3d, 4> d;
  d[0] << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  d[1] << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  d[2] << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  d[3] << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
  return d;
}

Eigen::Matrix3Xd subsample(const Eigen::Matrix3Xd& points, int max_points, std::uint64_t seed) {
  if (points.cols() <= max_points) return points;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(points.cols()));
  std::iota(all.begin(), all.end(), 0);
  std::vector<Eigen::Index> keep;
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(keep), max_points, rng);
  Eigen::Matrix3Xd out(3, max_points);
  for (int i = 0; i < max_points; ++i) out.col(i) = points.col(keep[i]);
  return out;
}

}  // namespace

DepthPoints depth_to_points(const RgbaImage& depth, const Intrinsics& k, const Extrinsics& e) {
  const Intrinsics kr = (k.width == depth.width && k.height == depth.height) ? k : k.resized(depth.width, depth.height);
  std::vector<Eigen::Vector3d> pix, world;
  for (int row = 0; row < depth.height; ++row) {
    for (int col = 0; col < depth.width; ++col) {
      const Rgba px = depth.at(row, col);
      const double d01 = decode_depth01(px);
      if (d01 >= kFarThreshold || !(d01 > 0)) continue;
      const double z = d01 * kFarPlane;
      pix.emplace_back(col, row, z);
      world.push_back(back_project(kr, e, raster_cell_center(row, col, depth.height), z));
    }
  }
  DepthPoints out;
  out.pixels.resize(3, static_cast<Eigen::Index>(pix.size()));
  out.world.resize(3, static_cast<Eigen::Index>(world.size()));
  for (std::size_t i = 0; i < pix.size(); ++i) {
    out.pixels.col(static_cast<Eigen::Index>(i)) = pix[i];
    out.world.col(static_cast<Eigen::Index>(i)) = world[i];
  }
  return out;
}

Eigen::Matrix3Xd reduce_points(const Eigen::Matrix3Xd& scene, const Eigen::Matrix3Xd& element, double offset) {
  if (element.cols() == 0) throw Error(ErrorCode::kNothingToSnap, "element has no points");
  const Eigen::Vector3d lo = element.rowwise().minCoeff().array() - offset;
  const Eigen::Vector3d hi = element.rowwise().maxCoeff().array() + offset;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < scene.cols(); ++i) {
    if ((scene.col(i).array() >= lo.array()).all() && (scene.col(i).array() <= hi.array()).all()) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorCode::kNothingToSnap, "nothing to snap to");
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = scene.col(keep[i]);
  return out;
}

double MixtureModel::density(const Eigen::Vector3d& x) const {
  double sum = 0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    sum += weights(i) * std::pow(2 * std::numbers::pi * variance, -1.5) *
           std::exp(-(means.col(i) - x).squaredNorm() / (2 * variance));
  }
  return sum;
}

MixtureModel svm_to_gmm(const OneClassSvm& svm) {
  return {svm.support_vectors, svm.alpha, 1.0 / (2.0 * svm.gamma)};
}

RigidParams identity_params() {
  RigidParams theta = RigidParams::Zero();
  theta(0) = 1;
  return theta;
}

Eigen::Matrix4d params_to_matrix(const RigidParams& theta) {
  const Eigen::Quaterniond q(theta(0), theta(1), theta(2), theta(3));
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = q.normalized().toRotationMatrix();
  m.topRightCorner<3, 1>() = theta.tail<3>();
  return m;
}

double l2_self(const MixtureModel& m) {
  const double s = 2 * m.variance;
  double sum = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      sum += m.weights(i) * m.weights(j) * gauss_overlap((m.means.col(i) - m.means.col(j)).squaredNorm(), s);
    }
  }
  return sum;
}

L2Value l2_distance(const MixtureModel& a, const MixtureModel& b, const RigidParams& theta) {
  const Eigen::Vector4d q = theta.head<4>();
  const double qn = q.norm();
  if (!(qn > 0)) throw Error(ErrorCode::kInvalidArgument, "zero quaternion");
  const Eigen::Vector4d qu = q / qn;
  const Eigen::Matrix3d r = Eigen::Quaterniond(qu(0), qu(1), qu(2), qu(3)).toRotationMatrix();
  const Eigen::Vector3d t = theta.tail<3>();
  const double s = a.variance + b.variance;
  const double norm = std::pow(2 * std::numbers::pi * s, -1.5);

  double cross = 0;
  Eigen::Vector3d grad_t = Eigen::Vector3d::Zero();
  Eigen::Matrix3d grad_r = Eigen::Matrix3d::Zero();
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const Eigen::Vector3d y = r * b.means.col(j) + t;
    const Eigen::Matrix3Xd diff = a.means.colwise() - y;
    const Eigen::ArrayXd e =
        (a.weights.array() * (-diff.colwise().squaredNorm().transpose().array() / (2 * s)).exp()) * (b.weights(j) * norm);
    cross += e.sum();
    const Eigen::Vector3d pull = diff * e.matrix() / s;
    grad_t += pull;
    grad_r += pull * b.means.col(j).transpose();
  }

  const auto partials = rotation_partials(qu);
  Eigen::Vector4d grad_qu;
  for (int k = 0; k < 4; ++k) grad_qu(k) = (grad_r.array() * partials[k].array()).sum();
  const Eigen::Vector4d grad_q = (Eigen::Matrix4d::Identity() - qu * qu.transpose()) * grad_qu / qn;

  L2Value out;
  out.value = l2_self(a) + l2_self(b) - 2 * cross;
  out.gradient.head<4>() = -2 * grad_q;
  out.gradient.tail<3>() = -2 * grad_t;
  return out;
}

MinimizeResult minimize_l2(const MixtureModel& scene, const MixtureModel& element, const RigidParams& start,
                           int max_iterations) {
  using Mat7 = Eigen::Matrix<double, 7, 7>;
  MinimizeResult out;
  out.theta = start;
  L2Value cur = l2_distance(scene, element, start);
  Mat7 h = Mat7::Identity();
  bool scaled = false;
  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter + 1;
    if (cur.gradient.cwiseAbs().maxCoeff() < 1e-12) break;
    RigidParams dir = -h * cur.gradient;
    double slope = cur.gradient.dot(dir);
    if (!(slope < 0)) {
      h.setIdentity();
      dir = -cur.gradient;
      slope = cur.gradient.dot(dir);
    }
    double step = 1.0;
    L2Value next;
    RigidParams cand;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      cand = out.theta + step * dir;
      next = l2_distance(scene, element, cand);
      if (next.value <= cur.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const RigidParams sv = cand - out.theta;
    const RigidParams yv = next.gradient - cur.gradient;
    const double decrease = cur.value - next.value;
    out.theta = cand;
    cur = next;
    ++out.accepted_steps;
    const double sy = sv.dot(yv);
    if (sy > 1e-300) {
      if (!scaled) {
        h *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Mat7 v = Mat7::Identity() - rho * yv * sv.transpose();
      h = v.transpose() * h * v + rho * sv * sv.transpose();
    }
    if (decrease <= 1e-15 * std::max(1.0, std::abs(cur.value)) && sv.cwiseAbs().maxCoeff() < 1e-12) break;
  }
  out.value = cur.value;
  out.theta.head<4>().normalize();
  return out;
}

SnapResult snap_points(const Eigen::Matrix3Xd& scene, const Eigen::Matrix3Xd& element, const SnapConfig& config) {
  const Eigen::Matrix3Xd crop = reduce_points(scene, element, config.crop_offset);
  const Eigen::Matrix3Xd scene_pts = subsample(crop, config.max_points, config.seed);
  const Eigen::Matrix3Xd element_pts = subsample(element, config.max_points, config.seed + 1);
  if (scene_pts.cols() < 10 || element_pts.cols() < 10) {
    throw Error(ErrorCode::kNothingToSnap, "too few points to snap");
  }

  const Eigen::Vector3d extent = (element.rowwise().maxCoeff() - element.rowwise().minCoeff()).array() + 2 * config.crop_offset;
  if (config.refine_levels < 0) throw Error(ErrorCode::kInvalidArgument, "refine_levels must be non-negative");
  auto mixtures = [&](double sigma) {
    OneClassSvmConfig svm_config;
    svm_config.nu = config.nu;
    svm_config.gamma = 1.0 / (2 * sigma * sigma);
    return std::pair{svm_to_gmm(fit_one_class_svm(scene_pts, svm_config)),
                     svm_to_gmm(fit_one_class_svm(element_pts, svm_config))};
  };
  double sigma = config.kernel_scale * extent.norm();
  const auto coarse = mixtures(sigma);
  const MixtureModel& scene_gmm = coarse.first;
  const MixtureModel& element_gmm = coarse.second;

  // Starts: identity, then small rotations about the element centroid.
  const Eigen::Vector3d c = element_pts.rowwise().mean();
  const double angle = config.start_angle_deg * std::numbers::pi / 180.0;
  const std::array<Eigen::Vector3d, 7> axes{Eigen::Vector3d::UnitX(),  -Eigen::Vector3d::UnitX(),
                                            Eigen::Vector3d::UnitY(),  -Eigen::Vector3d::UnitY(),
                                            Eigen::Vector3d::UnitZ(),  -Eigen::Vector3d::UnitZ(),
                                            Eigen::Vector3d::Ones().normalized()};
  std::vector<RigidParams> starts{identity_params()};
  for (int i = 0; static_cast<int>(starts.size()) < config.starts; ++i) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(angle, axes[i % axes.size()]));
    RigidParams theta;
    theta << q.w(), q.x(), q.y(), q.z(), c - q * c;
    starts.push_back(theta);
  }

  std::mutex mutex;
  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::size_t best_index = starts.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < starts.size();) {
      const MinimizeResult r = minimize_l2(scene_gmm, element_gmm, starts[i], config.max_iterations);
      std::lock_guard lock(mutex);
      if (r.value < best.value || (r.value == best.value && i < best_index)) {
        best = r;
        best_index = i;
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(starts.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Coarse to fine: the broad kernel finds the basin, narrower ones sharpen it.
  for (int level = 0; level < config.refine_levels; ++level) {
    sigma *= 0.5;
    const auto fine = mixtures(sigma);
    best = minimize_l2(fine.first, fine.second, best.theta, config.max_iterations);
  }

  SnapResult out;
  out.transform = params_to_matrix(best.theta);
  out.l2 = best.value;
  out.scene_points = static_cast<int>(scene_pts.cols());
  out.element_points = static_cast<int>(element_pts.cols());
  return out;
}

SnapResult snap(const RgbaImage& scene_depth, const RgbaImage& element_depth, const Intrinsics& k,
                const Extrinsics& e, const SnapConfig& config) {
  const DepthPoints scene = depth_to_points(scene_depth, k, e);
  const DepthPoints element = depth_to_points(element_depth, k, e);
  return snap_points(scene.world, element.world, config);
}

}  // namespace lt3d
