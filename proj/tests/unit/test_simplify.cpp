#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "lt3d/error.hpp"
#include "lt3d/simplify.hpp"
#include "synthetic.hpp"

using namespace lt3d;
using namespace lt3d::testing;

namespace {

Quadric plane_quadric(const Eigen::Vector3d& normal, double d) {
  const Eigen::Vector4d p(normal.x(), normal.y(), normal.z(), d);
  return p * p.transpose();
}

Quadric random_psd_quadric(Rng& rng) {
  Quadric q = Quadric::Zero();
  const int planes = std::uniform_int_distribution<int>(1, 5)(rng);
  for (int i = 0; i < planes; ++i) q += plane_quadric(uniform_vec(rng, -1, 1).normalized(), uniform(rng, -2, 2));
  return q;
}

void check_valid(const TriangleMesh& m) {
  for (Eigen::Index f = 0; f < m.face_count(); ++f) {
    for (int c = 0; c < 3; ++c) {
      CHECK(m.faces(c, f) >= 0);
      CHECK(m.faces(c, f) < m.vertex_count());
    }
    CHECK(m.faces(0, f) != m.faces(1, f));
    CHECK(m.faces(1, f) != m.faces(2, f));
    CHECK(m.faces(0, f) != m.faces(2, f));
  }
}

}  // namespace

TEST_SUITE("simplify") {
  TEST_CASE("a single z = 0 triangle gives the squared height") {
    TriangleMesh tri;
    tri.vertices.resize(3, 3);
    tri.vertices << 0, 1, 0, 0, 0, 1, 0, 0, 0;
    tri.faces.resize(3, 1);
    tri.faces << 0, 1, 2;
    const auto q = vertex_quadrics(tri);
    REQUIRE(q.size() == 3);
    Quadric expected = Quadric::Zero();
    expected(2, 2) = 1;
    CHECK((q[0] - expected).norm() < 1e-15);
    Rng rng(141);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d v = uniform_vec(rng, -5, 5);
      CHECK(quadric_error(q[1], v) == doctest::Approx(v.z() * v.z()).epsilon(1e-12));
    }
  }

  TEST_CASE("coplanar neighbourhoods have zero error on their plane") {
    const TriangleMesh grid = flat_grid(4);
    const auto q = vertex_quadrics(grid);
    Rng rng(142);
    for (const Quadric& qi : q) {
      CHECK(quadric_error(qi, Eigen::Vector3d(uniform(rng, -9, 9), uniform(rng, -9, 9), 0)) == doctest::Approx(0));
      CHECK((qi - qi.transpose()).norm() == 0);
    }
  }

  TEST_CASE("property: quadric error equals summed squared plane distances") {
    Rng rng(143);
    for (int trial = 0; trial < 50; ++trial) {
      const TriangleMesh mesh = random_mesh(rng, 30, 60, false, false);
      const auto q = vertex_quadrics(mesh);
      std::vector<std::vector<Eigen::Index>> incident(static_cast<std::size_t>(mesh.vertex_count()));
      for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
        for (int c = 0; c < 3; ++c) incident[static_cast<std::size_t>(mesh.faces(c, f))].push_back(f);
      for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
        const Eigen::Vector3d probe = uniform_vec(rng, -2, 2);
        double sum = 0;
        for (Eigen::Index f : incident[static_cast<std::size_t>(v)]) {
          const Eigen::Vector3d a = mesh.vertices.col(mesh.faces(0, f)), b = mesh.vertices.col(mesh.faces(1, f)),
                                c = mesh.vertices.col(mesh.faces(2, f));
          const Eigen::Vector3d n = (b - a).cross(c - a);
          if (n.norm() == 0) continue;
          const double dist = n.normalized().dot(probe - a);
          sum += dist * dist;
        }
        CHECK(std::abs(quadric_error(q[static_cast<std::size_t>(v)], probe) - sum) < 1e-9 * (1 + sum));
        // Positive semidefinite.
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(q[static_cast<std::size_t>(v)]).eigenvalues().minCoeff() >
              -1e-9);
      }
    }
  }

  TEST_CASE("zero-area faces contribute nothing") {
    TriangleMesh flat;
    flat.vertices.resize(3, 3);
    flat.vertices << 0, 1, 2, 0, 1, 2, 0, 1, 2;
    flat.faces.resize(3, 1);
    flat.faces << 0, 1, 2;
    for (const Quadric& q : vertex_quadrics(flat)) CHECK(q.norm() == 0);
  }

  TEST_CASE("orthogonal planes meet on their intersection line") {
    const Quadric a = plane_quadric({1, 0, 0}, -1);  // x = 1
    const Quadric b = plane_quadric({0, 1, 0}, -2);  // y = 2
    const Contraction c = optimal_position(a, b, {0, 0, 0}, {3, 3, 3});
    CHECK(c.cost == doctest::Approx(0).epsilon(1e-12));
    CHECK(c.position.x() == doctest::Approx(1));
    CHECK(c.position.y() == doctest::Approx(2));
  }

  TEST_CASE("zero quadrics fall back to a candidate with zero cost") {
    const Eigen::Vector3d v1(1, 2, 3), v2(3, 2, 1);
    const Contraction c = optimal_position(Quadric::Zero(), Quadric::Zero(), v1, v2);
    CHECK(c.cost == 0);
    CHECK((c.position == v1 || c.position == v2 || c.position == (v1 + v2) / 2));
  }

  TEST_CASE("property: the optimum is never worse than the endpoints or midpoint") {
    Rng rng(144);
    for (int trial = 0; trial < 1000; ++trial) {
      const Quadric q1 = random_psd_quadric(rng), q2 = random_psd_quadric(rng);
      const Eigen::Vector3d v1 = uniform_vec(rng, -3, 3), v2 = uniform_vec(rng, -3, 3);
      const Contraction c = optimal_position(q1, q2, v1, v2);
      const Quadric q = q1 + q2;
      const double tol = 1e-9 * (1 + q.norm());
      CHECK(c.cost == doctest::Approx(quadric_error(q, c.position)).epsilon(1e-9));
      CHECK(c.cost <= quadric_error(q, v1) + tol);
      CHECK(c.cost <= quadric_error(q, v2) + tol);
      CHECK(c.cost <= quadric_error(q, (v1 + v2) / 2) + tol);
    }
  }

  TEST_CASE("quality 1 returns the input unchanged") {
    Rng rng(145);
    const TriangleMesh mesh = random_mesh(rng, 100, 180, true, true);
    const TriangleMesh out = simplify(mesh, 1.0);
    CHECK(out.vertices == mesh.vertices);
    CHECK(out.faces == mesh.faces);
    CHECK(out.colors == mesh.colors);
    CHECK(out.normals == mesh.normals);
  }

  TEST_CASE("qualities outside (0, 1] are rejected") {
    const TriangleMesh grid = flat_grid(2);
    CHECK_THROWS_AS(simplify(grid, 0.0), Error);
    CHECK_THROWS_AS(simplify(grid, -0.5), Error);
    CHECK_THROWS_AS(simplify(grid, 1.5), Error);
    CHECK_THROWS_AS(simplify(grid, std::nan("")), Error);
  }

  TEST_CASE("a dense flat square stays planar") {
    const TriangleMesh grid = flat_grid(30);
    const TriangleMesh out = simplify(grid, 0.1);
    CHECK(out.face_count() <= static_cast<Eigen::Index>(0.1 * grid.face_count()));
    CHECK(out.vertices.row(2).cwiseAbs().maxCoeff() < 1e-9);
    check_valid(out);
  }

  TEST_CASE("an icosphere at quarter quality keeps its shape") {
    const TriangleMesh sphere = icosphere(4);
    REQUIRE(sphere.face_count() == 5120);
    const TriangleMesh out = simplify(sphere, 0.25);
    CHECK(out.face_count() <= 1280);
    CHECK(out.face_count() >= 1280 - 2);
    Rng rng(146);
    CHECK(sampled_hausdorff(rng, sphere, out, 4000) < 0.02);
    check_valid(out);
  }

  TEST_CASE("property: outputs are valid, deterministic and reach the target") {
    Rng rng(147);
    for (int trial = 0; trial < 20; ++trial) {
      const TriangleMesh mesh = trial % 2 ? icosphere(2) : flat_grid(std::uniform_int_distribution<int>(4, 12)(rng));
      const double quality = uniform(rng, 0.05, 1.0);
      const TriangleMesh a = simplify(mesh, quality);
      const TriangleMesh b = simplify(mesh, quality);
      check_valid(a);
      CHECK(a.vertices == b.vertices);
      CHECK(a.faces == b.faces);
      const double target = quality * static_cast<double>(mesh.face_count());
      CHECK(static_cast<double>(a.face_count()) <= std::max(target, 1.0) + 1e-9);
      CHECK(static_cast<double>(a.face_count()) >= target - 2 - 1e-9);
    }
  }

  TEST_CASE("property: random non-manifold meshes simplify to valid meshes") {
    Rng rng(148);
    for (int trial = 0; trial < 30; ++trial) {
      const TriangleMesh mesh = random_mesh(rng, 40, 80, trial % 2 == 0, false);
      const TriangleMesh out = simplify(mesh, uniform(rng, 0.1, 0.9));
      check_valid(out);
      CHECK(out.face_count() <= mesh.face_count());
      if (mesh.has_colors()) CHECK(out.colors.cols() == out.vertices.cols());
    }
  }

  TEST_CASE("vertex caps") {
    const TriangleMesh sphere = icosphere(4);
    const TriangleMesh capped = simplify_to_vertex_cap(sphere, 500);
    CHECK(static_cast<std::size_t>(capped.vertex_count()) <= 500);
    check_valid(capped);
    const TriangleMesh small = flat_grid(3);
    const TriangleMesh same = simplify_to_vertex_cap(small);
    CHECK(same.vertices == small.vertices);
    CHECK(same.faces == small.faces);
  }

  TEST_CASE("collider sidecars round-trip") {
    Rng rng(149);
    const TriangleMesh mesh = random_mesh(rng, 20, 30, false, false);
    const TriangleMesh back = parse_collider_json(collider_json(mesh));
    CHECK(back.vertices == mesh.vertices);
    CHECK(back.faces == mesh.faces);
    CHECK(collider_sidecar_path("/data/models/chair.ply") == std::filesystem::path("/data/models/chair.ply.collider.json"));
    CHECK_THROWS_AS(parse_collider_json("{\"vertices\": [[0, 0]], \"faces\": []}"), Error);
    CHECK_THROWS_AS(parse_collider_json("{\"vertices\": [[0, 0, 0]], \"faces\": [[0, 0, 1]]}"), Error);
    CHECK_THROWS_AS(parse_collider_json("not json"), Error);
  }
}
