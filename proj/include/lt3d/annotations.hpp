#pragma once

#include <map>
#include <string>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "lt3d/session.hpp"

namespace lt3d {

/// Axis-aligned pixel rectangle, inclusive on both ends, x = column and
/// y = row counted from the top-left corner.
struct Rect {
  Eigen::Vector2i min = Eigen::Vector2i::Zero();
  Eigen::Vector2i max = Eigen::Vector2i::Zero();

  int width() const { return max.x() - min.x() + 1; }
  int height() const { return max.y() - min.y() + 1; }
  bool contains(int x, int y) const { return x >= min.x() && x <= max.x() && y >= min.y() && y <= max.y(); }
  bool operator==(const Rect&) const = default;
};

struct Annotation2d {
  std::string class_name;
  Rect rect;
  Rgba color{};
  bool operator==(const Annotation2d&) const = default;
};

struct Annotation3d {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Rgba color{};
};

struct AnnotationSet {
  std::map<std::pair<int, ObjectId>, Annotation2d> rect2d;  // (shot, object)
  std::map<ObjectId, Annotation3d> pose3d;
};

/// Checks rectangle ordering and that every object id exists in the session.
void validate_annotations(const AnnotationSet& annotations, const Session& session);

struct ExportedAnnotations {
  std::string json2d;
  std::string json3d;
};

ExportedAnnotations export_annotations(const AnnotationSet& annotations);

/// Inverse of the 2D half of export_annotations.
std::map<std::pair<int, ObjectId>, Annotation2d> parse_annotations_2d(std::string_view json2d);

}  // namespace lt3d
