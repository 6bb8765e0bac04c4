#pragma once

#include <span>
#include <vector>

#include "lt3d/camera.hpp"
#include "lt3d/image.hpp"
#include "lt3d/mesh.hpp"

namespace lt3d {

/// Triangles closer than this to the camera plane are clipped away.
inline constexpr double kNearPlane = 1e-4;

struct RenderItem {
  const TriangleMesh* mesh = nullptr;
  Eigen::Matrix4d model = Eigen::Matrix4d::Identity();
  Rgba color{255, 255, 255, 255};
};

/// Output of the software rasterizer, all row-major from the top-left.
struct RenderBuffers {
  RgbaImage color;
  std::vector<double> depth;  // camera-frame z, +inf where nothing was drawn
  std::vector<int> item;      // index of the winning item, -1 for background

  int width() const { return color.width; }
  int height() const { return color.height; }
};

/// Z-buffered flat-color rendering sampled at pixel centres, without
/// anti-aliasing. `k` describes the full-resolution camera and is rescaled to
/// width x height. Equal depths keep the lower item index.
RenderBuffers render(std::span<const RenderItem> items, const Intrinsics& k, const Extrinsics& e, int width,
                     int height, Rgba background = {0, 0, 0, 255});

/// Encodes a depth buffer with the RGBA depth codec; empty pixels and depths
/// beyond the far plane encode the far plane.
RgbaImage encode_depth_image(const RenderBuffers& buffers);

}  // namespace lt3d
