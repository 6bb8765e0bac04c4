#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lt3d/json_io.hpp"

namespace lt3d {

/// Wire format: every message is a 4-byte big-endian body length followed
/// by that many bytes of UTF-8 JSON.
inline constexpr std::uint16_t kDefaultPort = 4444;
inline constexpr std::size_t kMaxFrameBytes = std::size_t{64} << 20;
/// Largest decoded PNG accepted from the wire, per side.
inline constexpr int kMaxWireImageSide = 4096;
/// Largest registration point set accepted from the wire.
inline constexpr std::size_t kMaxWirePoints = 256;

std::vector<std::uint8_t> encode_frame(std::string_view body);

/// Incremental frame splitter for a byte stream.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_frame = kMaxFrameBytes) : max_frame_(max_frame) {}

  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame body, if any. Throws kParse once a declared length
  /// exceeds the maximum; the stream cannot be resynchronised after that.
  std::optional<std::string> next();

 private:
  std::size_t max_frame_;
  std::vector<std::uint8_t> buffer_;
  std::size_t offset_ = 0;
};

/// Routes one request object to its operation:
///
///   {"type": "registration", "source": [[x,y,z]...], "target": [[x,y,z]...]}
///   {"type": "2D", "source": [3 points], "clicks": [[u,v] x 3],
///    "intrinsics": {...}, "extrinsics": [16]}
///   {"type": "bbox", "mask": "<base64 PNG>", "colors": {"<objectId>": [r,g,b,a]},
///    "shotId": n, "imageWidth": w, "imageHeight": h}
///   {"type": "snap", "sceneDepth": "<base64 PNG>", "elementDepth": "<base64 PNG>",
///    "intrinsics": {...}, "extrinsics": [16]}
///
/// Replies {"status": "ok", "result": ...} or
/// {"status": "error", "error": {"code": ..., "message": ...}}, echoing "id".
Json dispatch(const Json& request);

/// Parses, dispatches and serialises; never throws.
std::string handle_message(std::string_view body);

/// Response text for an error raised outside dispatch.
std::string error_response(std::string_view code, std::string_view message);

/// JSON serialisation that replaces invalid UTF-8 instead of throwing.
std::string dump_json(const Json& j);

}  // namespace lt3d
