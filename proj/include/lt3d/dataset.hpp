#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "lt3d/camera.hpp"
#include "lt3d/mesh.hpp"

namespace lt3d {

struct Shot {
  std::filesystem::path rgb;
  std::filesystem::path depth;
};

/// An IRIS capture:
///
///   rgb/<id>.png  depth/<id>.png  intrinsics.json  extrinsics.json
///   timestamps.json  registration/*.ply (optional)  pc/<id>.ply (optional)
///
/// intrinsics.json holds {"fx","fy","s","x0","y0","width","height"};
/// extrinsics.json maps each shot id to a 16-number row-major world-to-camera
/// matrix; timestamps.json maps capture timestamps to image names.
struct Dataset {
  std::filesystem::path root;
  std::map<int, Shot> shots;
  Intrinsics intrinsics;
  std::map<int, Extrinsics> extrinsics;
  std::map<std::string, std::string> timestamps;
  std::optional<TriangleMesh> mesh;
  std::map<int, PointCloud> pointclouds;
  int filter_step = 1;
};

/// Loads a dataset, keeping only shots whose id is a multiple of filter_step.
Dataset load_dataset(const std::filesystem::path& root, int filter_step = 1, bool load_geometry = true);

/// Writes the JSON side files of a dataset (images are written by the caller).
void write_dataset_metadata(const std::filesystem::path& root, const Intrinsics& intrinsics,
                            const std::map<int, Extrinsics>& extrinsics,
                            const std::map<std::string, std::string>& timestamps);

}  // namespace lt3d
