#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lt3d/depth_codec.hpp"

namespace lt3d {

/// 8-bit RGBA raster stored row-major from the top-left pixel.
struct RgbaImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbaImage() = default;
  RgbaImage(int w, int h, Rgba fill = {0, 0, 0, 255});

  Rgba at(int row, int col) const {
    const std::size_t i = 4 * (static_cast<std::size_t>(row) * width + col);
    return {data[i], data[i + 1], data[i + 2], data[i + 3]};
  }
  void set(int row, int col, const Rgba& c) {
    const std::size_t i = 4 * (static_cast<std::size_t>(row) * width + col);
    data[i] = c[0];
    data[i + 1] = c[1];
    data[i + 2] = c[2];
    data[i + 3] = c[3];
  }

  bool operator==(const RgbaImage&) const = default;
};

/// Decodes any PNG into RGBA8 (palette, grey and 16-bit inputs are converted).
RgbaImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RgbaImage& image);

RgbaImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbaImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lt3d
