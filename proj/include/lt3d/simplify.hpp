#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "lt3d/mesh.hpp"

namespace lt3d {

/// Fundamental error quadric: v^T Q v for homogeneous v is the sum of squared
/// distances to the accumulated planes.
using Quadric = Eigen::Matrix4d;

inline constexpr std::size_t kColliderVertexCap = 65536;

/// Sum of p p^T over the unit-normal planes p of each vertex's faces.
std::vector<Quadric> vertex_quadrics(const TriangleMesh& mesh);

inline double quadric_error(const Quadric& q, const Eigen::Vector3d& v) {
  const Eigen::Vector4d h = v.homogeneous();
  return h.dot(q * h);
}

struct Contraction {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double cost = 0.0;
};

/// Minimiser of v^T (q1 + q2) v. When the system is singular the minimiser
/// nearest the midpoint competes with v1, v2 and the midpoint; the cheapest wins.
Contraction optimal_position(const Quadric& q1, const Quadric& q2, const Eigen::Vector3d& v1,
                             const Eigen::Vector3d& v2);

struct SimplifyOptions {
  /// Non-edge vertex pairs closer than this are also collapse candidates.
  double epsilon = 0.0;
};

/// Greedy cheapest-first pair contraction until the triangle count drops to
/// quality * original. Collapses flipping a face normal by more than 90
/// degrees are skipped. quality = 1 returns the input unchanged.
TriangleMesh simplify(const TriangleMesh& mesh, double quality, const SimplifyOptions& options = {});

/// Lowers the quality until the result has at most `cap` vertices.
TriangleMesh simplify_to_vertex_cap(const TriangleMesh& mesh, std::size_t cap = kColliderVertexCap,
                                    const SimplifyOptions& options = {});

/// {"vertices": [[x, y, z], ...], "faces": [[a, b, c], ...]}
std::string collider_json(const TriangleMesh& mesh);
TriangleMesh parse_collider_json(std::string_view text);

/// `<mesh>.collider.json` next to the mesh file.
std::filesystem::path collider_sidecar_path(const std::filesystem::path& mesh_path);

}  // namespace lt3d
