#include "lt3d/annotations.hpp"

#include <set>

#include "lt3d/error.hpp"
#include "lt3d/json_io.hpp"

namespace lt3d {

void validate_annotations(const AnnotationSet& annotations, const Session& session) {
  std::set<ObjectId> ids;
  for (const auto& e : session.elements) ids.insert(e.id);
  for (const auto& [key, a] : annotations.rect2d) {
    if (!(a.rect.min.array() <= a.rect.max.array()).all()) {
      throw Error(ErrorCode::kInvalidArgument, "rectangle min exceeds max for object " + std::to_string(key.second));
    }
    if (!ids.count(key.second)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown object id " + std::to_string(key.second));
    }
  }
  for (const auto& [id, a] : annotations.pose3d) {
    if (!ids.count(id)) throw Error(ErrorCode::kInvalidArgument, "unknown object id " + std::to_string(id));
  }
}

ExportedAnnotations export_annotations(const AnnotationSet& annotations) {
  Json doc2d = Json::object();
  for (const auto& [key, a] : annotations.rect2d) {
    const auto [shot, object] = key;
    doc2d[std::to_string(shot)].push_back({{"shotId", shot},
                                           {"objectId", object},
                                           {"className", a.class_name},
                                           {"min", {a.rect.min.x(), a.rect.min.y()}},
                                           {"max", {a.rect.max.x(), a.rect.max.y()}},
                                           {"color", rgba_to_json(a.color)}});
  }
  Json doc3d = Json::object();
  for (const auto& [id, a] : annotations.pose3d) {
    const auto& q = a.rotation;
    doc3d[std::to_string(id)] = {{"center", vec3_to_json(a.center)},
                                 {"rotation", {q.x(), q.y(), q.z(), q.w()}},
                                 {"color", rgba_to_json(a.color)}};
  }
  return {doc2d.dump(2), doc3d.dump(2)};
}

std::map<std::pair<int, ObjectId>, Annotation2d> parse_annotations_2d(std::string_view json2d) {
  std::map<std::pair<int, ObjectId>, Annotation2d> out;
  Json doc;
  try {
    doc = Json::parse(json2d);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "2D annotations must be an object");
  try {
    for (const auto& [shot_key, entries] : doc.items()) {
      for (const Json& j : entries) {
        const int shot = j.at("shotId").get<int>();
        if (std::to_string(shot) != shot_key) throw Error(ErrorCode::kSchema, "entry filed under the wrong shot");
        Annotation2d a;
        a.class_name = j.at("className").get<std::string>();
        a.rect.min = {j.at("min").at(0).get<int>(), j.at("min").at(1).get<int>()};
        a.rect.max = {j.at("max").at(0).get<int>(), j.at("max").at(1).get<int>()};
        a.color = rgba_from_json(j.at("color"));
        if (!out.emplace(std::pair{shot, j.at("objectId").get<ObjectId>()}, std::move(a)).second) {
          throw Error(ErrorCode::kDuplicate, "duplicate rectangle in shot " + shot_key);
        }
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, e.what());
  }
  return out;
}

}  // namespace lt3d
