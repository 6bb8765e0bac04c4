#pragma once

#include <json.hpp>

#include <Eigen/Core>

#include "lt3d/camera.hpp"
#include "lt3d/depth_codec.hpp"

namespace lt3d {

using Json = nlohmann::json;

/// 16 numbers, row-major.
Json matrix4_to_json(const Eigen::Matrix4d& m);
Eigen::Matrix4d matrix4_from_json(const Json& j);

Json intrinsics_to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const Json& j);

/// [[x, y, z], ...]
Json points_to_json(const Eigen::Matrix3Xd& points);
Eigen::Matrix3Xd points_from_json(const Json& j);

/// [[u, v], ...]
Eigen::Matrix2Xd pixels_from_json(const Json& j);
Json pixels_to_json(const Eigen::Matrix2Xd& pixels);

Json rgba_to_json(const Rgba& c);
Rgba rgba_from_json(const Json& j);

Eigen::Vector3d vec3_from_json(const Json& j);
Json vec3_to_json(const Eigen::Vector3d& v);

}  // namespace lt3d
