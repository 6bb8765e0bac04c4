#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "doctest.h"
#include "lt3d/error.hpp"
#include "lt3d/tpsrpm.hpp"
#include "synthetic.hpp"

using namespace lt3d;
using namespace lt3d::testing;

namespace {

Eigen::Matrix3Xd random_points(Rng& rng, int n, double extent = 1.0) {
  Eigen::Matrix3Xd p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) = uniform_vec(rng, -extent, extent);
  return p;
}

/// Random points with a volume large enough that no subset is close to coplanar.
Eigen::Matrix3Xd spread_points(Rng& rng, int n) {
  while (true) {
    const Eigen::Matrix3Xd p = random_points(rng, n);
    const Eigen::Matrix3Xd c = p.colwise() - p.rowwise().mean();
    Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(c);
    if (svd.singularValues()(2) > 0.3 * svd.singularValues()(0)) return p;
  }
}

Eigen::Matrix4d random_nine_dof(Rng& rng) {
  return compose_trs(uniform_vec(rng, -3, 3), random_rotation(rng).toRotationMatrix(), uniform_vec(rng, 0.5, 2));
}

std::vector<int> shuffled(Rng& rng, int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Eigen::Matrix3Xd reorder(const Eigen::Matrix3Xd& x, const std::vector<int>& order) {
  Eigen::Matrix3Xd out(3, x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out.col(i) = x.col(order[i]);
  return out;
}

double diagonal(const Eigen::Matrix3Xd& x) { return (x.rowwise().maxCoeff() - x.rowwise().minCoeff()).norm(); }

std::optional<ErrorCode> code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("tpsrpm") {
  TEST_CASE("softassign of aligned points at a tiny temperature is the identity") {
    Rng rng(91);
    const Eigen::Matrix3Xd v = spread_points(rng, 6);
    const Eigen::MatrixXd m = softassign(v, v, 1e-4);
    CHECK((m - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("a symmetric pair at a large temperature is uniform") {
    Eigen::Matrix3Xd v(3, 2), x(3, 2);
    v << -1, 1, 0, 0, 0, 0;
    x << 0, 0, -1, 1, 0, 0;
    const Eigen::MatrixXd m = softassign(v, x, 1e6);
    CHECK((m.array() - 0.5).abs().maxCoeff() < 1e-9);
  }

  TEST_CASE("property: softassign is doubly stochastic") {
    Rng rng(92);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = std::uniform_int_distribution<int>(2, 8)(rng);
      const Eigen::MatrixXd m =
          softassign(random_points(rng, n), random_points(rng, n), std::exp(uniform(rng, -3, 2)), 1000000, 1e-15);
      CHECK((m.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-6);
      CHECK((m.colwise().sum().array() - 1).abs().maxCoeff() < 1e-6);
      CHECK((m.array() >= 0).all());
    }
  }

  TEST_CASE("underflowed rows are reseeded and bad temperatures rejected") {
    Eigen::Matrix3Xd v(3, 2), x(3, 2);
    v << 0, 1000, 0, 0, 0, 0;
    x << 0, 1, 0, 0, 0, 0;
    const Eigen::MatrixXd m = softassign(v, x, 1e-3);
    CHECK(m.allFinite());
    CHECK((m.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(softassign(v, x, 0.0), Error);
    CHECK_THROWS_AS(softassign(v, x, -1.0), Error);
  }

  TEST_CASE("property: fixed-correspondence fits are exact on 9-DoF data") {
    Rng rng(93);
    for (int trial = 0; trial < 300; ++trial) {
      const Eigen::Matrix3Xd v = spread_points(rng, std::uniform_int_distribution<int>(4, 10)(rng));
      const Eigen::Matrix4d truth = random_nine_dof(rng);
      const Eigen::Matrix3Xd x = transform_points(truth, v);
      CHECK((fit_affine(v, x) - truth).cwiseAbs().maxCoeff() < 1e-9);
      const RegistrationResult r = fit_restricted(v, x);
      CHECK(is_restricted(r.decomposition));
      CHECK(r.c_dist < 1e-12);
      CHECK((r.transform - truth).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("c_dist is the RMS error over the target diagonal") {
    Eigen::Matrix3Xd src(3, 2), dst(3, 2);
    src << 0, 3, 0, 4, 0, 0;
    dst = src;
    CHECK(c_dist(Eigen::Matrix4d::Identity(), src, dst) == 0);
    Eigen::Matrix4d shift = Eigen::Matrix4d::Identity();
    shift(0, 3) = 1;
    CHECK(c_dist(shift, src, dst) == doctest::Approx(1.0 / 5));
    CHECK_THROWS_AS(c_dist(shift, src, Eigen::Matrix3Xd::Zero(3, 2)), Error);
  }

  TEST_CASE("identical point sets register to the identity") {
    Rng rng(94);
    const Eigen::Matrix3Xd v = spread_points(rng, 4);
    const RegistrationResult r = tpsrpm(v, v);
    CHECK((r.transform - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((r.decomposition.scale - Eigen::Vector3d::Ones()).norm() < 1e-6);
  }

  TEST_CASE("property: shuffled 9-DoF targets are recovered") {
    Rng rng(95);
    for (int trial = 0; trial < 40; ++trial) {
      const Eigen::Matrix3Xd v = spread_points(rng, 4);
      const Eigen::Matrix4d truth = random_nine_dof(rng);
      const Eigen::Matrix3Xd x = reorder(transform_points(truth, v), shuffled(rng, 4));
      const RegistrationResult r = tpsrpm(v, x);
      const double rms = std::sqrt((transform_points(r.transform, v) - transform_points(truth, v))
                                       .colwise()
                                       .squaredNorm()
                                       .mean());
      CHECK(rms < 1e-3 * diagonal(x));
      CHECK(decompose_trs(r.transform).skew() < kMaxRestrictedSkew);
    }
  }

  TEST_CASE("a sheared target has no restricted transform") {
    Eigen::Matrix3Xd v(3, 4);
    v << 1, 1, -1, -1, 1, -1, 1, -1, 1, -1, -1, 1;
    const Eigen::Matrix3Xd x = shear_matrix({0.3, 0, 0}) * v;
    CHECK(code_of([&] { tpsrpm(v, x); }) == ErrorCode::kNoRestrictedTransform);
    CHECK(code_of([&] { repair_correspondence(v, x); }) == ErrorCode::kNoRestrictedTransform);
  }

  TEST_CASE("property: results are always restricted") {
    Rng rng(96);
    for (int trial = 0; trial < 40; ++trial) {
      const Eigen::Matrix3Xd v = spread_points(rng, 4);
      const Eigen::Matrix3Xd x = spread_points(rng, 4) * uniform(rng, 0.5, 3);
      try {
        const RegistrationResult r = tpsrpm(v, x);
        CHECK(decompose_trs(r.transform).skew() < kMaxRestrictedSkew);
        CHECK((decompose_trs(r.transform).scale.array() > 0).all());
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kNoRestrictedTransform);
      }
    }
  }

  TEST_CASE("property: registration commutes with a global rigid motion") {
    // Conjugating an anisotropic scale by a rotation shears it, so only
    // similarity targets stay inside the restricted family under this motion.
    Rng rng(97);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Matrix3Xd v = spread_points(rng, 4);
      const Eigen::Matrix4d similarity = compose_trs(uniform_vec(rng, -3, 3), random_rotation(rng).toRotationMatrix(),
                                                     Eigen::Vector3d::Constant(uniform(rng, 0.5, 2)));
      const Eigen::Matrix3Xd x = reorder(transform_points(similarity, v), shuffled(rng, 4));
      const Eigen::Matrix4d g = random_rigid(rng, 5);
      const RegistrationResult a = tpsrpm(v, x);
      const RegistrationResult b = tpsrpm(transform_points(g, v), transform_points(g, x));
      const Eigen::Matrix3Xd mapped_a = transform_points(g, transform_points(a.transform, v));
      const Eigen::Matrix3Xd mapped_b = transform_points(b.transform, transform_points(g, v));
      CHECK((mapped_a - mapped_b).cwiseAbs().maxCoeff() < 1e-3 * diagonal(x));
    }
  }

  TEST_CASE("repair under an adversarial order matches the known correspondence") {
    Rng rng(98);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::Matrix3Xd v = spread_points(rng, 4);
      const Eigen::Matrix3Xd x = transform_points(random_nine_dof(rng), v);

      std::vector<int> order(4), worst(4);
      std::iota(order.begin(), order.end(), 0);
      double worst_skew = -1;
      do {
        const double s = decompose_trs(fit_affine(v, reorder(x, order))).skew();
        if (s > worst_skew) worst_skew = s, worst = order;
      } while (std::next_permutation(order.begin(), order.end()));

      const RegistrationResult oracle = fit_restricted(v, x);
      const RegistrationResult r = repair_correspondence(v, reorder(x, worst));
      CHECK((transform_points(r.transform, v) - transform_points(oracle.transform, v)).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(r.repaired);
      CHECK(r.repair.early_exit);
      CHECK(r.repair.evaluated + r.repair.skipped == 24);
    }
  }

  TEST_CASE("repair of shuffled identical points returns the identity") {
    Rng rng(99);
    const Eigen::Matrix3Xd v = spread_points(rng, 4);
    const std::vector<int> order = {2, 0, 3, 1};
    const RegistrationResult r = repair_correspondence(v, reorder(v, order));
    CHECK((r.transform - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    for (int a = 0; a < 4; ++a) CHECK(order[r.correspondence[a]] == a);
  }

  TEST_CASE("property: repair does not depend on the target order") {
    Rng rng(100);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::Matrix3Xd v = spread_points(rng, 4);
      Eigen::Matrix3Xd x = transform_points(random_nine_dof(rng), v);
      x += 0.02 * random_points(rng, 4);
      RepairConfig config;
      config.early_exit = 0;
      const RegistrationResult a = repair_correspondence(v, x, config);
      const RegistrationResult b = repair_correspondence(v, reorder(x, shuffled(rng, 4)), config);
      CHECK((transform_points(a.transform, v) - transform_points(b.transform, v)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(a.repair.evaluated == 24);
    }
  }

  TEST_CASE("invalid inputs") {
    Rng rng(101);
    const Eigen::Matrix3Xd v = spread_points(rng, 4);
    CHECK(code_of([&] { tpsrpm(v, spread_points(rng, 5)); }) == ErrorCode::kInvalidArgument);
    Eigen::Matrix3Xd flat = random_points(rng, 5);
    flat.row(2).setZero();
    CHECK(code_of([&] { tpsrpm(flat, flat); }) == ErrorCode::kDegenerate);
    CHECK(code_of([&] { tpsrpm(v.leftCols(3), v.leftCols(3)); }) == ErrorCode::kDegenerate);
    Eigen::Matrix3Xd bad = v;
    bad(0, 0) = std::nan("");
    CHECK(code_of([&] { tpsrpm(bad, v); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { repair_correspondence(spread_points(rng, 9), spread_points(rng, 9)); }) ==
          ErrorCode::kInvalidArgument);
  }
}
