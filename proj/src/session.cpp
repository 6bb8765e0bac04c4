#include "lt3d/session.hpp"

#include <filesystem>
#include <set>

#include "lt3d/error.hpp"
#include "lt3d/json_io.hpp"
#include "lt3d/ply.hpp"

namespace lt3d {

const TriangleMesh& LabelingElement::shape() const {
  static const TriangleMesh cube = unit_cube_mesh();
  return mesh ? *mesh : cube;
}

void validate_session(const Session& session) {
  std::set<ObjectId> ids;
  std::set<Rgba> colors;
  for (const auto& e : session.elements) {
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::kDuplicate, "duplicate element id " + std::to_string(e.id));
    }
    if (e.color[0] == 0 && e.color[1] == 0 && e.color[2] == 0) {
      throw Error(ErrorCode::kInvalidArgument, "element " + std::to_string(e.id) + " uses the background color");
    }
    // Alpha is ignored: masks compare RGB only after PNG round trips.
    const Rgba rgb{e.color[0], e.color[1], e.color[2], 255};
    if (!colors.insert(rgb).second) {
      throw Error(ErrorCode::kDuplicate, "duplicate color on element " + std::to_string(e.id));
    }
    if (!(e.pose.scale.array() > 0).all() || !e.pose.scale.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "element " + std::to_string(e.id) + " has a non-positive scale");
    }
    if (!e.pose.position.allFinite() || !e.pose.rotation.coeffs().allFinite() ||
        std::abs(e.pose.rotation.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument, "element " + std::to_string(e.id) + " has an invalid pose");
    }
  }
}

std::string save_session(const Session& session) {
  validate_session(session);
  Json elements = Json::array();
  for (const auto& e : session.elements) {
    const auto& q = e.pose.rotation;
    Json je = {{"id", e.id},
               {"className", e.class_name},
               {"color", rgba_to_json(e.color)},
               {"position", vec3_to_json(e.pose.position)},
               {"rotation", {q.x(), q.y(), q.z(), q.w()}},
               {"scale", vec3_to_json(e.pose.scale)}};
    if (!e.mesh_path.empty()) {
      je["shape"] = {{"mesh", e.mesh_path}};
    } else {
      je["shape"] = "cuboid";
    }
    elements.push_back(std::move(je));
  }
  Json doc = {{"version", kSessionSchemaVersion}, {"dataset", session.dataset_path}, {"elements", elements}};
  return doc.dump(2);
}

Session load_session(std::string_view text, const std::string& base_dir, bool load_meshes) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("session: ") + e.what());
  }
  Session session;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::kSchema, "session must be an object");
    if (doc.at("version") != kSessionSchemaVersion) {
      throw Error(ErrorCode::kSchema, "unsupported session version " + doc.at("version").dump());
    }
    session.dataset_path = doc.value("dataset", "");
    for (const Json& je : doc.at("elements")) {
      LabelingElement e;
      if (!je.at("id").is_number_integer()) throw Error(ErrorCode::kSchema, "element id must be an integer");
      e.id = je.at("id").get<ObjectId>();
      e.class_name = je.at("className").get<std::string>();
      e.color = rgba_from_json(je.at("color"));
      e.pose.position = vec3_from_json(je.at("position"));
      const Json& r = je.at("rotation");
      if (!r.is_array() || r.size() != 4) throw Error(ErrorCode::kSchema, "rotation must be [x, y, z, w]");
      e.pose.rotation = Eigen::Quaterniond(r[3].get<double>(), r[0].get<double>(), r[1].get<double>(),
                                           r[2].get<double>());
      e.pose.scale = vec3_from_json(je.at("scale"));
      if (je.contains("shape") && je["shape"].is_object()) {
        e.mesh_path = je["shape"].at("mesh").get<std::string>();
        if (load_meshes) {
          std::filesystem::path p(e.mesh_path);
          if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
          auto model = read_ply(p);
          auto* tm = std::get_if<TriangleMesh>(&model);
          if (!tm) throw Error(ErrorCode::kSchema, "element mesh " + p.string() + " has no faces");
          e.mesh = std::make_shared<const TriangleMesh>(std::move(*tm));
        }
      } else if (je.contains("shape") && je["shape"] != "cuboid") {
        throw Error(ErrorCode::kSchema, "unknown element shape " + je["shape"].dump());
      }
      session.elements.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("session: ") + e.what());
  }
  validate_session(session);
  return session;
}

}  // namespace lt3d
