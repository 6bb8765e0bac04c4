#include "lt3d/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lt3d/depth_codec.hpp"
#include "lt3d/transform.hpp"

namespace lt3d {
namespace {

using Poly = std::vector<Eigen::Vector3d>;

Poly clip_near(const Poly& in) {
  Poly out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Eigen::Vector3d& a = in[i];
    const Eigen::Vector3d& b = in[(i + 1) % in.size()];
    const bool a_in = a.z() >= kNearPlane;
    const bool b_in = b.z() >= kNearPlane;
    if (a_in) out.push_back(a);
    if (a_in != b_in) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      Eigen::Vector3d p = a + t * (b - a);
      p.z() = kNearPlane;
      out.push_back(p);
    }
  }
  return out;
}

struct Rasterizer {
  const Intrinsics& k;
  RenderBuffers& buf;
  int item;
  Rgba color;

  // Raster position: x right, y down, pixel centres at half-integers.
  Eigen::Vector2d to_raster(const Eigen::Vector3d& c) const {
    const double u = (k.fx * c.x() + k.s * c.y()) / c.z() + k.x0;
    const double v = k.fy * c.y() / c.z() + k.y0;
    return {u, buf.height() - v};
  }

  void triangle(const Eigen::Vector3d& c0, const Eigen::Vector3d& c1, const Eigen::Vector3d& c2) {
    const Eigen::Vector2d p0 = to_raster(c0), p1 = to_raster(c1), p2 = to_raster(c2);
    const double area = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    if (!(std::abs(area) > 1e-12)) return;
    const int w = buf.width(), h = buf.height();
    const double min_x = std::min({p0.x(), p1.x(), p2.x()}), max_x = std::max({p0.x(), p1.x(), p2.x()});
    const double min_y = std::min({p0.y(), p1.y(), p2.y()}), max_y = std::max({p0.y(), p1.y(), p2.y()});
    const int c_lo = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int c_hi = std::min(w - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int r_lo = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int r_hi = std::min(h - 1, static_cast<int>(std::ceil(max_y - 0.5)));
    auto edge = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, double x, double y) {
      return (b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x());
    };
    const double inv_area = 1.0 / area;
    for (int row = r_lo; row <= r_hi; ++row) {
      const double y = row + 0.5;
      for (int col = c_lo; col <= c_hi; ++col) {
        const double x = col + 0.5;
        const double b0 = edge(p1, p2, x, y) * inv_area;
        const double b1 = edge(p2, p0, x, y) * inv_area;
        const double b2 = edge(p0, p1, x, y) * inv_area;
        if (b0 < 0 || b1 < 0 || b2 < 0) continue;
        const double z = 1.0 / (b0 / c0.z() + b1 / c1.z() + b2 / c2.z());
        const std::size_t idx = static_cast<std::size_t>(row) * w + col;
        if (z < buf.depth[idx]) {
          buf.depth[idx] = z;
          buf.item[idx] = item;
          buf.color.set(row, col, color);
        }
      }
    }
  }
};

}  // namespace

RenderBuffers render(std::span<const RenderItem> items, const Intrinsics& k, const Extrinsics& e, int width,
                     int height, Rgba background) {
  validate(k);
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "raster size must be positive");
  const Intrinsics kr = (k.width == width && k.height == height) ? k : k.resized(width, height);
  RenderBuffers buf;
  buf.color = RgbaImage(width, height, background);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  buf.depth.assign(n, std::numeric_limits<double>::infinity());
  buf.item.assign(n, -1);

  for (std::size_t i = 0; i < items.size(); ++i) {
    const RenderItem& it = items[i];
    if (!it.mesh) continue;
    const Eigen::Matrix4d mv = e * it.model;
    const Eigen::Matrix3Xd cam = transform_points(mv, it.mesh->vertices);
    Rasterizer r{kr, buf, static_cast<int>(i), it.color};
    for (Eigen::Index f = 0; f < it.mesh->face_count(); ++f) {
      Poly poly{cam.col(it.mesh->faces(0, f)), cam.col(it.mesh->faces(1, f)), cam.col(it.mesh->faces(2, f))};
      if (std::all_of(poly.begin(), poly.end(), [](const auto& p) { return p.z() >= kNearPlane; })) {
        r.triangle(poly[0], poly[1], poly[2]);
        continue;
      }
      poly = clip_near(poly);
      for (std::size_t j = 1; j + 1 < poly.size(); ++j) r.triangle(poly[0], poly[j], poly[j + 1]);
    }
  }
  return buf;
}

RgbaImage encode_depth_image(const RenderBuffers& buffers) {
  RgbaImage out(buffers.width(), buffers.height());
  for (int row = 0; row < out.height; ++row) {
    for (int col = 0; col < out.width; ++col) {
      const double z = buffers.depth[static_cast<std::size_t>(row) * out.width + col];
      out.set(row, col, encode_depth(std::min(z, kFarPlane)));
    }
  }
  return out;
}

}  // namespace lt3d
