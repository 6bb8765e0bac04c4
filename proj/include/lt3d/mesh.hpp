#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace lt3d {

using Colors = Eigen::Matrix<std::uint8_t, 4, Eigen::Dynamic>;

/// Indexed triangle mesh. Vertices are columns (meters).
///
/// Polygons with more than three corners are stored fan-triangulated;
/// `polygon_of_face` maps each triangle back to its source polygon so that
/// per-polygon quantities (normals, face counts) survive triangulation.
struct TriangleMesh {
  Eigen::Matrix3Xd vertices;
  Colors colors;               // empty or 4 x vertex count
  Eigen::Matrix3Xd normals;    // empty or 3 x vertex count
  Eigen::Matrix3Xi faces;
  std::vector<int> polygon_of_face;  // empty means one polygon per triangle

  Eigen::Index vertex_count() const { return vertices.cols(); }
  Eigen::Index face_count() const { return faces.cols(); }
  Eigen::Index polygon_count() const;
  bool has_colors() const { return colors.cols() == vertices.cols() && colors.cols() > 0; }
  bool has_normals() const { return normals.cols() == vertices.cols() && normals.cols() > 0; }
};

struct PointCloud {
  Eigen::Matrix3Xd points;
  Colors colors;  // empty or 4 x point count

  Eigen::Index size() const { return points.cols(); }
};

/// Per-vertex normals: normalised sum of area-weighted polygon normals.
/// Zero-area polygons contribute nothing; a vertex with no contributing
/// polygon gets +z.
TriangleMesh recompute_normals(TriangleMesh mesh);

/// Throws unless every face index addresses an existing vertex.
void validate_mesh(const TriangleMesh& mesh);

/// Axis-aligned unit cube [-0.5, 0.5]^3 as 12 outward-facing triangles.
TriangleMesh unit_cube_mesh();

}  // namespace lt3d
