#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lt3d/mesh.hpp"

namespace lt3d {

enum class PlyEncoding { kAscii, kBinaryLittleEndian, kBinaryBigEndian };

enum class PlyScalar { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

struct PlyProperty {
  std::string name;
  PlyScalar type = PlyScalar::kFloat32;
  bool is_list = false;
  PlyScalar count_type = PlyScalar::kUInt8;  // list properties only
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::kAscii;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;  // byte offset of the first body byte

  const PlyElement* find(const std::string& name) const;
};

PlyHeader parse_ply_header(std::span<const std::uint8_t> bytes);

using PlyModel = std::variant<TriangleMesh, PointCloud>;

/// Parses a whole PLY document. Yields a PointCloud when the header declares
/// no face element and a TriangleMesh otherwise. Body values are read in
/// header order; unknown elements and properties are skipped.
PlyModel parse_ply(std::span<const std::uint8_t> bytes);

PlyModel read_ply(const std::filesystem::path& path);

struct PlyWriteOptions {
  PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian;
  bool double_precision = true;
};

std::vector<std::uint8_t> serialize_ply(const TriangleMesh& mesh, const PlyWriteOptions& options = {});
std::vector<std::uint8_t> serialize_ply(const PointCloud& cloud, const PlyWriteOptions& options = {});

}  // namespace lt3d
