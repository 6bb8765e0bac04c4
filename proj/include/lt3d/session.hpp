#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lt3d/depth_codec.hpp"
#include "lt3d/mesh.hpp"
#include "lt3d/transform.hpp"

namespace lt3d {

using ObjectId = std::int64_t;

/// A posed, colored, class-tagged labeling cuboid (or imported CAD mesh).
/// Black is reserved for the mask background.
struct LabelingElement {
  ObjectId id = 0;
  std::string class_name;
  Rgba color{255, 0, 0, 255};
  Pose pose;
  /// Object-frame mesh; null means the unit cube scaled by `pose.scale`.
  std::shared_ptr<const TriangleMesh> mesh;
  std::string mesh_path;  // where `mesh` was loaded from, kept for sessions

  /// Object-frame triangles, before the pose is applied.
  const TriangleMesh& shape() const;
  /// Object-to-world transform including the per-axis scale.
  Eigen::Matrix4d model_matrix() const { return pose.matrix(); }
};

struct Session {
  std::string dataset_path;
  std::vector<LabelingElement> elements;
};

/// Throws on duplicate ids, duplicate colors, black colors or non-positive
/// scale components.
void validate_session(const Session& session);

inline constexpr int kSessionSchemaVersion = 1;

std::string save_session(const Session& session);

/// Parses and validates a session document. Relative mesh paths are resolved
/// against `base_dir`; meshes are loaded only when `load_meshes` is set.
Session load_session(std::string_view text, const std::string& base_dir = {}, bool load_meshes = false);

}  // namespace lt3d
