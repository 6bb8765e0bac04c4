#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "lt3d/error.hpp"
#include "lt3d/snapping.hpp"
#include "synthetic.hpp"

using namespace lt3d;
using namespace lt3d::testing;

namespace {

Eigen::Matrix3Xd random_points(Rng& rng, int n, double lo, double hi) {
  Eigen::Matrix3Xd p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) = uniform_vec(rng, lo, hi);
  return p;
}

Eigen::Matrix3Xd gaussian_cloud(Rng& rng, int n, const Eigen::Vector3d& center, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  Eigen::Matrix3Xd p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) = center + Eigen::Vector3d(g(rng), g(rng), g(rng));
  return p;
}

/// Points sampled on the faces of a posed unit cube.
Eigen::Matrix3Xd cuboid_surface(Rng& rng, const Pose& pose, int n) {
  return transform_points(pose.matrix(), sample_surface(rng, unit_cube_mesh(), n));
}

MixtureModel random_mixture(Rng& rng, int n, double variance) {
  MixtureModel m;
  m.means = random_points(rng, n, -1, 1);
  m.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  m.variance = variance;
  return m;
}

RigidParams random_params(Rng& rng) {
  RigidParams theta;
  theta << uniform(rng, 0.5, 1.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5),
      uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5);
  return theta;
}

Extrinsics forward_camera() { return look_at(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 1)); }

}  // namespace

TEST_SUITE("snapping") {
  TEST_CASE("an all-background depth image has no points") {
    const RgbaImage far(256, 144, encode_depth(kFarPlane));
    const DepthPoints p = depth_to_points(far, test_intrinsics(256, 144), forward_camera());
    CHECK(p.world.cols() == 0);
    CHECK(p.pixels.cols() == 0);
  }

  TEST_CASE("a fronto-parallel plane at 3 m decodes to its depth") {
    const TriangleMesh grid = flat_grid(2);
    Eigen::Matrix4d model = Eigen::Matrix4d::Identity();
    model.diagonal().head<2>() << 20, 20;
    model.topRightCorner<3, 1>() << -10, -10, 3;
    const Intrinsics k = test_intrinsics(256, 144);
    const RgbaImage depth = render_depth({{&grid, model}}, k, forward_camera(), 256, 144);
    const DepthPoints p = depth_to_points(depth, k, forward_camera());
    REQUIRE(p.world.cols() == 256 * 144);
    CHECK((p.world.row(2).array() - 3).abs().maxCoeff() < 1e-5);
    CHECK((p.pixels.row(2).array() - 3).abs().maxCoeff() < 1e-5);
    CHECK(p.pixels(0, 0) == 0);
    CHECK(p.pixels(1, 0) == 0);
    CHECK(p.pixels(0, 1) == 1);
  }

  TEST_CASE("property: a rendered cuboid decodes onto its faces") {
    Rng rng(121);
    const TriangleMesh cube = unit_cube_mesh();
    const Intrinsics k = test_intrinsics(256, 144);
    for (int trial = 0; trial < 10; ++trial) {
      Pose pose;
      pose.position = uniform_vec(rng, -1, 1) + Eigen::Vector3d(0, 0, 4);
      pose.rotation = random_rotation(rng);
      pose.scale = uniform_vec(rng, 0.4, 1.5);
      const Extrinsics e = forward_camera();
      const DepthPoints p = depth_to_points(render_depth({{&cube, pose.matrix()}}, k, e, 256, 144), k, e);
      REQUIRE(p.world.cols() > 0);
      double worst = 0;
      for (Eigen::Index i = 0; i < p.world.cols(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index f = 0; f < cube.face_count(); ++f) {
          const auto v = [&](int c) {
            return transform_points(pose.matrix(), Eigen::Vector3d(cube.vertices.col(cube.faces(c, f))));
          };
          best = std::min(best, point_triangle_distance(p.world.col(i), v(0), v(1), v(2)));
        }
        worst = std::max(worst, best);
      }
      CHECK(worst < 1e-3);
    }
  }

  TEST_CASE("cropping examples") {
    Rng rng(122);
    const Eigen::Matrix3Xd element = random_points(rng, 50, -0.5, 0.5);
    CHECK(reduce_points(element, element).cols() == 50);

    Eigen::Matrix3Xd scene(3, 3);
    const Eigen::Vector3d hi = element.rowwise().maxCoeff();
    scene.col(0) = Eigen::Vector3d::Zero();
    scene.col(1) = Eigen::Vector3d(hi.x() + 0.2, 0, 0);
    scene.col(2) = Eigen::Vector3d(hi.x() + 0.1, 0, 0);
    const Eigen::Matrix3Xd kept = reduce_points(scene, element);
    REQUIRE(kept.cols() == 2);
    CHECK(kept.col(0) == scene.col(0));
    CHECK(kept.col(1) == scene.col(2));

    Eigen::Matrix3Xd far = scene;
    far.row(0).array() += 10;
    CHECK_THROWS_AS(reduce_points(far, element), Error);
    try {
      reduce_points(far, element);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNothingToSnap);
    }
  }

  TEST_CASE("property: cropping equals a brute-force box test") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Matrix3Xd element = random_points(rng, 30, -0.5, 0.5);
      const Eigen::Matrix3Xd scene = random_points(rng, 400, -1, 1);
      const Eigen::Vector3d lo = element.rowwise().minCoeff().array() - 0.15;
      const Eigen::Vector3d hi = element.rowwise().maxCoeff().array() + 0.15;
      std::vector<Eigen::Vector3d> expected;
      for (Eigen::Index i = 0; i < scene.cols(); ++i) {
        const Eigen::Vector3d q = scene.col(i);
        if ((q.array() >= lo.array()).all() && (q.array() <= hi.array()).all()) expected.push_back(q);
      }
      const Eigen::Matrix3Xd kept = reduce_points(scene, element);
      REQUIRE(kept.cols() == static_cast<Eigen::Index>(expected.size()));
      for (std::size_t i = 0; i < expected.size(); ++i) CHECK(kept.col(static_cast<Eigen::Index>(i)) == expected[i]);
    }
  }

  TEST_CASE("property: one-class SVM nu bounds") {
    Rng rng(124);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = std::uniform_int_distribution<int>(20, 300)(rng);
      const Eigen::Matrix3Xd points = gaussian_cloud(rng, n, uniform_vec(rng, -2, 2), uniform(rng, 0.05, 1));
      OneClassSvmConfig config;
      config.nu = uniform(rng, 0.05, 0.5);
      config.gamma = uniform(rng, 0.2, 5);
      const OneClassSvm svm = fit_one_class_svm(points, config);
      CHECK(static_cast<double>(svm.alpha.size()) >= config.nu * n - 1e-9);
      CHECK(svm.alpha.sum() == doctest::Approx(1));
      CHECK((svm.alpha.array() > 0).all());
      // Margin vectors sit on the boundary up to the solver tolerance, which
      // decision() reports in units of the normalised coefficients.
      const double margin = config.tolerance / (config.nu * n);
      int below = 0;
      for (int i = 0; i < n; ++i) below += svm.decision(points.col(i)) < -margin;
      CHECK(static_cast<double>(below) / n <= config.nu + 0.05);
    }
  }

  TEST_CASE("a tight cluster keeps at least nu n support vectors") {
    Rng rng(125);
    const OneClassSvm svm = fit_one_class_svm(gaussian_cloud(rng, 100, Eigen::Vector3d::Zero(), 0.01));
    CHECK(svm.support_vectors.cols() >= 10);
  }

  TEST_CASE("duplicate points train without failure") {
    const Eigen::Matrix3Xd same = Eigen::Matrix3Xd::Ones(3, 40);
    const OneClassSvm svm = fit_one_class_svm(same);
    CHECK(std::isfinite(svm.decision(Eigen::Vector3d::Ones())));
    CHECK(std::isfinite(svm.decision(Eigen::Vector3d::Zero())));
    CHECK_THROWS_AS(fit_one_class_svm(Eigen::Matrix3Xd::Ones(3, 9)), Error);
    OneClassSvmConfig bad;
    bad.nu = 0;
    CHECK_THROWS_AS(fit_one_class_svm(same, bad), Error);
  }

  TEST_CASE("mixtures from support vectors") {
    OneClassSvm single;
    single.support_vectors = Eigen::Matrix3Xd::Zero(3, 1);
    single.alpha = Eigen::VectorXd::Ones(1);
    single.gamma = 2;
    const MixtureModel m = svm_to_gmm(single);
    CHECK(m.size() == 1);
    CHECK(m.means.col(0) == Eigen::Vector3d::Zero());
    CHECK(m.weights(0) == 1);
    CHECK(m.variance == 0.25);

    Rng rng(126);
    const double sigma = std::sqrt(m.variance);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Vector3d away = 3 * sigma * uniform_vec(rng, -1, 1).normalized();
      CHECK(m.density(Eigen::Vector3d::Zero()) >= m.density(away));
      CHECK(m.density(away) == doctest::Approx(m.density(Eigen::Vector3d::Zero()) * std::exp(-4.5)));
    }
    for (int trial = 0; trial < 10; ++trial) {
      const OneClassSvm svm = fit_one_class_svm(gaussian_cloud(rng, 200, Eigen::Vector3d::Zero(), 0.5));
      const MixtureModel g = svm_to_gmm(svm);
      CHECK(g.size() == svm.support_vectors.cols());
      CHECK(g.weights == svm.alpha);
      CHECK(g.variance == doctest::Approx(1 / (2 * svm.gamma)));
    }
  }

  TEST_CASE("a mixture compared with itself") {
    Rng rng(127);
    const MixtureModel m = random_mixture(rng, 20, 0.2);
    const L2Value v = l2_distance(m, m, identity_params());
    CHECK(std::abs(v.value) < 1e-12 * l2_self(m));
    CHECK(v.gradient.norm() < 1e-10);
    CHECK(l2_self(m) > 0);
  }

  TEST_CASE("property: the L2 gradient matches central differences") {
    Rng rng(128);
    for (int trial = 0; trial < 50; ++trial) {
      const MixtureModel a = random_mixture(rng, 30, uniform(rng, 0.1, 0.5));
      MixtureModel b = random_mixture(rng, 25, a.variance);
      const RigidParams theta = random_params(rng);
      const L2Value v = l2_distance(a, b, theta);
      RigidParams fd;
      for (int j = 0; j < 7; ++j) {
        RigidParams up = theta, down = theta;
        up(j) += 1e-6;
        down(j) -= 1e-6;
        fd(j) = (l2_distance(a, b, up).value - l2_distance(a, b, down).value) / 2e-6;
      }
      CHECK((v.gradient - fd).norm() / std::max(fd.norm(), 1e-12) < 1e-5);
    }
  }

  TEST_CASE("translating far away approaches the sum of self terms") {
    Rng rng(129);
    const MixtureModel a = random_mixture(rng, 15, 0.1);
    const MixtureModel b = random_mixture(rng, 15, 0.1);
    const double limit = l2_self(a) + l2_self(b);
    double previous_gap = std::numeric_limits<double>::infinity();
    for (double shift : {2.0, 3.0, 4.0, 6.0, 10.0}) {
      RigidParams theta = identity_params();
      theta(4) = shift;
      const double gap = limit - l2_distance(a, b, theta).value;
      CHECK(gap >= -1e-12);
      CHECK(gap <= previous_gap);
      previous_gap = gap;
    }
    CHECK(previous_gap < 1e-12 * limit);
  }

  TEST_CASE("property: parameters map to proper rigid motions") {
    Rng rng(130);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Matrix4d m = params_to_matrix(random_params(rng));
      const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
      CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-12);
      CHECK(r.determinant() == doctest::Approx(1).epsilon(1e-12));
    }
    CHECK(params_to_matrix(identity_params()) == Eigen::Matrix4d::Identity());
  }

  TEST_CASE("property: minimisation never increases the objective") {
    Rng rng(131);
    for (int trial = 0; trial < 20; ++trial) {
      const MixtureModel a = random_mixture(rng, 20, 0.2);
      MixtureModel b = a;
      b.means = transform_points(random_rigid(rng, 0.2), a.means);
      const RigidParams start = identity_params();
      const double initial = l2_distance(a, b, start).value;
      for (int budget : {1, 2, 5, 20, 100}) {
        const MinimizeResult r = minimize_l2(a, b, start, budget);
        CHECK(r.value <= initial + 1e-15);
        CHECK(r.value == doctest::Approx(l2_distance(a, b, r.theta).value));
        CHECK(r.accepted_steps <= r.iterations);
      }
    }
  }

  TEST_CASE("an element already on its target barely moves") {
    Rng rng(132);
    Pose pose;
    pose.position = {0.3, 0.4, -0.2};
    pose.rotation = Eigen::AngleAxisd(0.4, Eigen::Vector3d(0.2, 1, 0).normalized());
    pose.scale = {0.6, 0.8, 0.5};
    const Eigen::Matrix3Xd scene = cuboid_surface(rng, pose, 1500);
    const SnapResult r = snap_points(scene, scene);
    CHECK(rotation_angle_deg(r.transform.topLeftCorner<3, 3>(), Eigen::Matrix3d::Identity()) < 0.5);
    const Eigen::Matrix3Xd moved = transform_points(r.transform, scene);
    CHECK((moved - scene).colwise().norm().maxCoeff() < 5e-3);
    CHECK(r.scene_points == 1500);
  }

  TEST_CASE("property: snapping commutes with a rigid motion of the whole scene") {
    Rng rng(133);
    for (int trial = 0; trial < 3; ++trial) {
      Pose pose;
      pose.position = uniform_vec(rng, -0.5, 0.5);
      pose.rotation = random_rotation(rng);
      pose.scale = uniform_vec(rng, 0.4, 0.9);
      Pose start = pose;
      start.position += 0.05 * uniform_vec(rng, -1, 1).normalized();
      const Eigen::Matrix3Xd scene = cuboid_surface(rng, pose, 1200);
      const Eigen::Matrix3Xd element = cuboid_surface(rng, start, 1200);
      const Eigen::Matrix4d g = random_rigid(rng, 2);

      const SnapResult a = snap_points(scene, element);
      const SnapResult b = snap_points(transform_points(g, scene), transform_points(g, element));
      const Eigen::Matrix3Xd mapped_a = transform_points(g, transform_points(a.transform, element));
      const Eigen::Matrix3Xd mapped_b = transform_points(b.transform, transform_points(g, element));
      CHECK((mapped_a - mapped_b).colwise().norm().maxCoeff() < 5e-3);
    }
  }

  TEST_CASE("snapping with nothing around the element fails") {
    Rng rng(134);
    Pose pose;
    const Eigen::Matrix3Xd element = cuboid_surface(rng, pose, 200);
    Pose elsewhere;
    elsewhere.position = {5, 0, 0};
    const Eigen::Matrix3Xd scene = cuboid_surface(rng, elsewhere, 200);
    try {
      snap_points(scene, element);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNothingToSnap);
    }
    SnapConfig bad;
    bad.refine_levels = -1;
    CHECK_THROWS_AS(snap_points(element, element, bad), Error);
  }

  TEST_CASE("a rendered scene with the object removed has nothing to snap to") {
    const TriangleMesh cube = unit_cube_mesh();
    const Intrinsics k = test_intrinsics(256, 144);
    const Extrinsics e = look_at({0.4, 1.4, 2.4}, {0, 0.4, 0});
    Pose pose;
    pose.position = {0, 0.4, 0};
    const RgbaImage empty(256, 144, encode_depth(kFarPlane));
    const RgbaImage element = render_depth({{&cube, pose.matrix()}}, k, e, 256, 144);
    try {
      snap(empty, element, k, e);
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::kNothingToSnap);
    }
  }
}
