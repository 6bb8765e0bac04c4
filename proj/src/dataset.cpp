#include "lt3d/dataset.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "lt3d/error.hpp"
#include "lt3d/json_io.hpp"
#include "lt3d/ply.hpp"

namespace fs = std::filesystem;

namespace lt3d {
namespace {

Json read_json(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kMissingFile, "missing " + path.filename().string());
  }
  std::ifstream in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.filename().string() + ": " + e.what());
  }
}

bool parse_id(const std::string& text, int& id) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, id);
  return ec == std::errc() && ptr == end && id >= 0;
}

/// Shot ids of the numbered PNGs in a folder.
std::map<int, fs::path> numbered_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingFile, "missing " + dir.filename().string() + "/ folder");
  }
  std::map<int, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    int id = 0;
    if (!parse_id(entry.path().stem().string(), id)) {
      throw Error(ErrorCode::kSchema, "unexpected image name " + entry.path().string());
    }
    out.emplace(id, entry.path());
  }
  return out;
}

}  // namespace

Dataset load_dataset(const fs::path& root, int filter_step, bool load_geometry) {
  if (filter_step < 1) throw Error(ErrorCode::kInvalidArgument, "filter step must be positive");
  if (!fs::is_directory(root)) throw Error(ErrorCode::kMissingFile, "no dataset directory at " + root.string());

  Dataset ds;
  ds.root = root;
  ds.filter_step = filter_step;
  ds.intrinsics = intrinsics_from_json(read_json(root / "intrinsics.json"));

  const Json ext = read_json(root / "extrinsics.json");
  const Json stamps = read_json(root / "timestamps.json");
  if (!ext.is_object()) throw Error(ErrorCode::kSchema, "extrinsics.json must be an object");
  if (!stamps.is_object()) throw Error(ErrorCode::kSchema, "timestamps.json must be an object");
  for (const auto& [key, value] : stamps.items()) {
    if (!value.is_string()) throw Error(ErrorCode::kSchema, "timestamps.json values must be strings");
    ds.timestamps.emplace(key, value.get<std::string>());
  }

  const auto rgb = numbered_images(root / "rgb");
  const auto depth = numbered_images(root / "depth");
  for (const auto& [id, path] : rgb) {
    if (!depth.count(id)) throw Error(ErrorCode::kSchema, "shot " + std::to_string(id) + " has no depth image");
  }
  for (const auto& [id, path] : depth) {
    if (!rgb.count(id)) throw Error(ErrorCode::kSchema, "shot " + std::to_string(id) + " has no rgb image");
  }

  for (const auto& [key, value] : ext.items()) {
    int id = 0;
    if (!parse_id(key, id)) throw Error(ErrorCode::kSchema, "bad shot id '" + key + "' in extrinsics.json");
    if (id % filter_step != 0) continue;
    const Extrinsics e = matrix4_from_json(value);
    if (!is_valid_extrinsics(e, 1e-6)) {
      throw Error(ErrorCode::kSchema, "extrinsic of shot " + key + " is not a rigid transform");
    }
    if (!rgb.count(id)) throw Error(ErrorCode::kMissingFile, "missing images for shot " + key);
    ds.extrinsics.emplace(id, e);
    ds.shots.emplace(id, Shot{rgb.at(id), depth.at(id)});
  }

  if (!load_geometry) return ds;

  const fs::path reg = root / "registration";
  if (fs::is_directory(reg)) {
    std::set<fs::path> plys;
    for (const auto& entry : fs::directory_iterator(reg)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ply") plys.insert(entry.path());
    }
    if (!plys.empty()) {
      auto model = read_ply(*plys.begin());
      if (auto* mesh = std::get_if<TriangleMesh>(&model)) {
        ds.mesh = std::move(*mesh);
      } else {
        throw Error(ErrorCode::kSchema, "registration mesh has no faces");
      }
    }
  }
  const fs::path pc = root / "pc";
  if (fs::is_directory(pc)) {
    for (const auto& [id, shot] : ds.shots) {
      const fs::path p = pc / (std::to_string(id) + ".ply");
      if (!fs::is_regular_file(p)) continue;
      auto model = read_ply(p);
      if (auto* cloud = std::get_if<PointCloud>(&model)) {
        ds.pointclouds.emplace(id, std::move(*cloud));
      } else {
        auto& mesh = std::get<TriangleMesh>(model);
        ds.pointclouds.emplace(id, PointCloud{std::move(mesh.vertices), std::move(mesh.colors)});
      }
    }
  }
  return ds;
}

void write_dataset_metadata(const fs::path& root, const Intrinsics& intrinsics,
                            const std::map<int, Extrinsics>& extrinsics,
                            const std::map<std::string, std::string>& timestamps) {
  fs::create_directories(root);
  auto write = [&](const char* name, const Json& j) {
    std::ofstream out(root / name);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + name);
  };
  write("intrinsics.json", intrinsics_to_json(intrinsics));
  Json ext = Json::object();
  for (const auto& [id, e] : extrinsics) ext[std::to_string(id)] = matrix4_to_json(e);
  write("extrinsics.json", ext);
  write("timestamps.json", Json(timestamps));
}

}  // namespace lt3d
