#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "lt3d/error.hpp"

namespace lt3d {

/// Far clipping plane of the depth captures, in meters.
inline constexpr double kFarPlane = 65.0;

using Rgba = std::array<std::uint8_t, 4>;

/// Normalised depth in [0, 1] (before the far-plane multiply): channel bytes
/// over 255, dotted with (1, 1/256, 1/256^2, 1/256^3).
inline double decode_depth01(const Rgba& px) {
  constexpr double kStep = 1.0 / 256.0;
  const double d = (px[0] + px[1] * kStep + px[2] * kStep * kStep + px[3] * kStep * kStep * kStep) / 255.0;
  return std::min(d, 1.0);
}

/// Linear depth in meters, clamped to [0, kFarPlane].
inline double decode_depth(const Rgba& px) { return decode_depth01(px) * kFarPlane; }

/// Right inverse of decode_depth: base-256 digits of 255 * z / kFarPlane,
/// truncated. decode_depth(encode_depth(z)) <= z and never undershoots by
/// more than kFarPlane / (255 * 256^3).
inline Rgba encode_depth(double z) {
  if (!(z >= 0.0) || !(z <= kFarPlane)) {
    throw Error(ErrorCode::kInvalidArgument, "depth outside [0, far plane]");
  }
  double y = 255.0 * (z / kFarPlane);
  Rgba out{};
  for (int i = 0; i < 4; ++i) {
    const double digit = std::clamp(std::floor(y), 0.0, 255.0);
    out[i] = static_cast<std::uint8_t>(digit);
    y = (y - digit) * 256.0;
  }
  return out;
}

}  // namespace lt3d
