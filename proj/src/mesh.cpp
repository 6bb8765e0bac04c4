#include "lt3d/mesh.hpp"

#include <algorithm>

#include <Eigen/Geometry>

#include "lt3d/error.hpp"

namespace lt3d {

Eigen::Index TriangleMesh::polygon_count() const {
  if (polygon_of_face.empty()) return faces.cols();
  return *std::max_element(polygon_of_face.begin(), polygon_of_face.end()) + 1;
}

void validate_mesh(const TriangleMesh& mesh) {
  if (mesh.faces.cols() > 0 &&
      (mesh.faces.minCoeff() < 0 || mesh.faces.maxCoeff() >= mesh.vertices.cols())) {
    throw Error(ErrorCode::kInvalidArgument, "face index out of range");
  }
  if (!mesh.polygon_of_face.empty() &&
      static_cast<Eigen::Index>(mesh.polygon_of_face.size()) != mesh.faces.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "polygon map size differs from face count");
  }
}

TriangleMesh recompute_normals(TriangleMesh mesh) {
  validate_mesh(mesh);
  if (mesh.faces.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "mesh has no faces");

  const Eigen::Index nv = mesh.vertices.cols();
  const Eigen::Index nf = mesh.faces.cols();
  Eigen::Matrix3Xd accum = Eigen::Matrix3Xd::Zero(3, nv);

  // Sum the triangle area vectors of each polygon first, so a fan-split quad
  // contributes its full area once to each of its corners.
  Eigen::Index f = 0;
  std::vector<int> corners;
  while (f < nf) {
    Eigen::Index end = f + 1;
    if (!mesh.polygon_of_face.empty()) {
      while (end < nf && mesh.polygon_of_face[end] == mesh.polygon_of_face[f]) ++end;
    }
    Eigen::Vector3d area = Eigen::Vector3d::Zero();
    corners.clear();
    for (Eigen::Index t = f; t < end; ++t) {
      const Eigen::Vector3d a = mesh.vertices.col(mesh.faces(0, t));
      const Eigen::Vector3d b = mesh.vertices.col(mesh.faces(1, t));
      const Eigen::Vector3d c = mesh.vertices.col(mesh.faces(2, t));
      area += (b - a).cross(c - a);
      for (int k = 0; k < 3; ++k) corners.push_back(mesh.faces(k, t));
    }
    std::sort(corners.begin(), corners.end());
    corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
    for (int v : corners) accum.col(v) += area;
    f = end;
  }

  mesh.normals.resize(3, nv);
  for (Eigen::Index v = 0; v < nv; ++v) {
    const double n = accum.col(v).norm();
    mesh.normals.col(v) = n > 0 ? Eigen::Vector3d(accum.col(v) / n) : Eigen::Vector3d::UnitZ();
  }
  return mesh;
}

TriangleMesh unit_cube_mesh() {
  TriangleMesh mesh;
  mesh.vertices.resize(3, 8);
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.col(i) << ((i & 1) ? 0.5 : -0.5), ((i & 2) ? 0.5 : -0.5), ((i & 4) ? 0.5 : -0.5);
  }
  // Two triangles per face, counter-clockwise seen from outside.
  mesh.faces.resize(3, 12);
  mesh.faces << 0, 0, 4, 4, 0, 0, 2, 2, 0, 0, 1, 1,
                2, 3, 5, 7, 1, 5, 6, 7, 4, 6, 3, 7,
                3, 1, 7, 6, 5, 4, 7, 3, 6, 2, 7, 5;
  return mesh;
}

}  // namespace lt3d
