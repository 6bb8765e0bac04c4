#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lt3d/annotations.hpp"
#include "lt3d/camera.hpp"
#include "lt3d/image.hpp"
#include "lt3d/session.hpp"

namespace lt3d {

inline constexpr int kMaskWidth = 320;
inline constexpr int kMaskHeight = 180;

/// Rendered labeling elements of one shot. Pixels are either black or the
/// opaque color of an element listed in `colors`.
struct MaskImage {
  RgbaImage image;
  std::map<Rgba, ObjectId> colors;  // keys carry alpha 255
  int shot_id = 0;
};

/// Pixel coordinates as (row, col).
using PixelSet = std::vector<Eigen::Vector2i>;

inline Rgba opaque(Rgba c) { return {c[0], c[1], c[2], 255}; }

MaskImage rasterize_masks(const Session& session, const Intrinsics& k, const Extrinsics& e, int shot_id,
                          int width = kMaskWidth, int height = kMaskHeight);

/// Coordinates whose RGB equals `color`, in row-major scan order. Throws when
/// the color is not in the mask's color map.
PixelSet extract_pixels(const MaskImage& mask, Rgba color);

struct RpcaConfig {
  /// Scores above mean + gate_sigmas * stddev are outliers. A filled convex
  /// mask needs at most about 5.92 here, so the default never trims one.
  double gate_sigmas = 6.0;
};

/// Outlier scores of each pixel: squared projection of the standardised
/// coordinates onto the leading principal axis, over its eigenvalue. Empty
/// when every pixel has the same coordinates.
std::vector<double> rpca_scores(const PixelSet& pixels);

/// Drops pixels whose score exceeds the gate. Never drops everything.
PixelSet rpca_filter(const PixelSet& pixels, const RpcaConfig& config = {});

/// Bounding rectangle of the pixels in mask coordinates, or nothing when the
/// set is empty (object not visible).
std::optional<Rect> min_rect(const PixelSet& pixels);

/// Maps a mask-resolution rectangle onto the image resolution so that it
/// covers exactly the image pixels under the mask cells.
Rect scale_rect(const Rect& rect, int mask_width, int mask_height, int image_width, int image_height);

/// Area, height and width percentages relative to the mask must all exceed
/// Threshold = 625 / 57600 * 100 (area) or its square root (sides).
bool accept_rect(const Rect& rect, int mask_width, int mask_height);

/// Percent threshold on rectangle area.
inline constexpr double kRectAreaThreshold = 625.0 / 57600.0 * 100.0;

/// filter -> rectangle -> acceptance for every colored object in a mask.
/// Rectangles are in image pixels; rejected or invisible objects are absent.
std::map<ObjectId, Rect> bbox_from_mask(const MaskImage& mask, int image_width, int image_height,
                                        const RpcaConfig& config = {});

/// Full pipeline for one shot, starting from rasterization.
std::map<ObjectId, Rect> bbox_for_shot(const Session& session, const Intrinsics& k, const Extrinsics& e,
                                       int shot_id, const RpcaConfig& config = {});

/// Rectangles for every shot (computed concurrently) plus the 3D pose of
/// every element.
AnnotationSet annotate_shots(const Session& session, const Intrinsics& k, const std::map<int, Extrinsics>& shots,
                             unsigned threads = 0, const RpcaConfig& config = {});

}  // namespace lt3d
