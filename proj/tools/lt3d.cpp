#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lt3d/annotations.hpp"
#include "lt3d/bbox.hpp"
#include "lt3d/dataset.hpp"
#include "lt3d/error.hpp"
#include "lt3d/json_io.hpp"
#include "lt3d/meshless.hpp"
#include "lt3d/ply.hpp"
#include "lt3d/protocol.hpp"
#include "lt3d/service.hpp"
#include "lt3d/session.hpp"
#include "lt3d/simplify.hpp"
#include "lt3d/snapping.hpp"
#include "lt3d/tpsrpm.hpp"

namespace fs = std::filesystem;
using namespace lt3d;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

Json read_json_file(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

/// Point files hold either a bare [[x,y,z], ...] array or {"source": [...]}.
Eigen::Matrix3Xd read_points(const fs::path& path, const char* key) {
  const Json j = read_json_file(path);
  return points_from_json(j.is_object() ? j.at(key) : j);
}

void print_matrix(const Eigen::Matrix4d& m) { std::cout << dump_json(matrix4_to_json(m)) << '\n'; }

int inspect(const fs::path& root, int filter_step) {
  const Dataset ds = load_dataset(root, filter_step);
  std::cout << "shots: " << ds.shots.size() << '\n';
  std::cout << "ids:";
  for (const auto& [id, shot] : ds.shots) std::cout << ' ' << id;
  std::cout << '\n';
  const Intrinsics& k = ds.intrinsics;
  std::cout << "intrinsics: fx=" << k.fx << " fy=" << k.fy << " s=" << k.s << " x0=" << k.x0 << " y0=" << k.y0
            << " size=" << k.width << 'x' << k.height << '\n';
  if (ds.mesh) {
    std::cout << "mesh: " << ds.mesh->vertex_count() << " vertices, " << ds.mesh->polygon_count() << " faces\n";
  } else {
    std::cout << "mesh: none\n";
  }
  std::cout << "point clouds: " << ds.pointclouds.size() << '\n';
  return 0;
}

int annotate(const fs::path& root, const fs::path& session_path, const fs::path& out, int filter_step) {
  const Dataset ds = load_dataset(root, filter_step, false);
  const Session session = load_session(read_text(session_path), session_path.parent_path().string(), true);
  const AnnotationSet set = annotate_shots(session, ds.intrinsics, ds.extrinsics);
  validate_annotations(set, session);
  const ExportedAnnotations files = export_annotations(set);
  fs::create_directories(out);
  write_text(out / "annotations_2d.json", files.json2d + "\n");
  write_text(out / "annotations_3d.json", files.json3d + "\n");
  std::cout << set.rect2d.size() << " rectangles over " << ds.shots.size() << " shots\n";
  return 0;
}

int meshless(const fs::path& root, int shot, const fs::path& element, const fs::path& clicks_path, int filter_step) {
  const Dataset ds = load_dataset(root, filter_step, false);
  const auto e = ds.extrinsics.find(shot);
  if (e == ds.extrinsics.end()) throw Error(ErrorCode::kInvalidArgument, "shot " + std::to_string(shot) + " not loaded");
  const Eigen::Matrix3Xd picks = read_points(element, "source");
  const Json cj = read_json_file(clicks_path);
  const Eigen::Matrix2Xd clicks = pixels_from_json(cj.is_object() ? cj.at("clicks") : cj);
  if (picks.cols() != 3 || clicks.cols() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "expected exactly three picks and three clicks");
  }
  print_matrix(solve_placement(ds.intrinsics, e->second, clicks, picks).transform);
  return 0;
}

int snap_cmd(const fs::path& scene, const fs::path& element, const fs::path& camera) {
  const Json cam = read_json_file(camera);
  const Intrinsics k = intrinsics_from_json(cam.at("intrinsics"));
  const Extrinsics e = matrix4_from_json(cam.at("extrinsics"));
  print_matrix(snap(read_png(scene), read_png(element), k, e).transform);
  return 0;
}

int simplify_cmd(const fs::path& input, double quality, std::size_t cap, const std::string& out) {
  auto model = read_ply(input);
  auto* mesh = std::get_if<TriangleMesh>(&model);
  if (!mesh) throw Error(ErrorCode::kInvalidArgument, input.string() + " has no faces");
  TriangleMesh result = simplify(*mesh, quality);
  if (cap > 0 && static_cast<std::size_t>(result.vertex_count()) > cap) result = simplify_to_vertex_cap(result, cap);
  write_text(collider_sidecar_path(input), collider_json(result));
  if (!out.empty()) {
    const auto bytes = serialize_ply(result);
    write_file(out, bytes);
  }
  std::cout << mesh->face_count() << " -> " << result.face_count() << " triangles, " << result.vertex_count()
            << " vertices\n";
  return 0;
}

int serve(const std::string& bind, std::uint16_t port) {
  Service service({bind, port});
  service.start();
  std::cerr << "listening on " << bind << ':' << service.port() << '\n';
  service.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D labeling engine"};
  app.require_subcommand(1);
  int filter_step = 1;
  app.add_option("--filter-step", filter_step, "Load only shots whose id is a multiple of this")
      ->check(CLI::PositiveNumber);

  std::string dataset, session, out, element, clicks, scene_depth, element_depth, camera, ply, source, target;
  std::string bind = "127.0.0.1";
  int shot = 0;
  double quality = 1.0;
  std::size_t cap = 0;
  std::uint16_t port = kDefaultPort;

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarise a dataset");
  inspect_cmd->add_option("dataset", dataset)->required();

  auto* annotate_cmd = app.add_subcommand("annotate", "Export 2D and 3D annotations for a session");
  annotate_cmd->add_option("dataset", dataset)->required();
  annotate_cmd->add_option("session", session)->required();
  annotate_cmd->add_option("--out", out, "Output directory")->required();

  auto* register_cmd = app.add_subcommand("register", "Place a box from four point pairs");
  register_cmd->add_option("--source", source)->required();
  register_cmd->add_option("--target", target)->required();

  auto* meshless_cmd = app.add_subcommand("meshless", "Place a box from three image clicks");
  meshless_cmd->add_option("--dataset", dataset)->required();
  meshless_cmd->add_option("--shot", shot)->required();
  meshless_cmd->add_option("--element", element, "Points picked on the element")->required();
  meshless_cmd->add_option("--clicks", clicks, "Clicked pixels")->required();

  auto* snap_sub = app.add_subcommand("snap", "Snap an element onto the scene");
  snap_sub->add_option("--scene-depth", scene_depth)->required();
  snap_sub->add_option("--element-depth", element_depth)->required();
  snap_sub->add_option("--camera", camera, "JSON with intrinsics and extrinsics")->required();

  auto* simplify_sub = app.add_subcommand("simplify", "Simplify a mesh into a collider");
  simplify_sub->add_option("mesh", ply)->required();
  simplify_sub->add_option("--quality", quality)->check(CLI::Range(0.0, 1.0));
  simplify_sub->add_option("--vertex-cap", cap, "Maximum vertex count (65536 for colliders)");
  simplify_sub->add_option("--out", out, "Also write the result as PLY");

  auto* serve_sub = app.add_subcommand("serve", "Run the TCP service");
  serve_sub->add_option("--port", port);
  serve_sub->add_option("--bind", bind);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inspect_cmd) return inspect(dataset, filter_step);
    if (*annotate_cmd) return annotate(dataset, session, out, filter_step);
    if (*register_cmd) {
      print_matrix(tpsrpm(read_points(source, "source"), read_points(target, "target")).transform);
      return 0;
    }
    if (*meshless_cmd) return meshless(dataset, shot, element, clicks, filter_step);
    if (*snap_sub) return snap_cmd(scene_depth, element_depth, camera);
    if (*simplify_sub) return simplify_cmd(ply, quality, cap, out);
    if (*serve_sub) return serve(bind, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
