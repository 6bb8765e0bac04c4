#include "lt3d/protocol.hpp"

#include <map>

#include "lt3d/base64.hpp"
#include "lt3d/bbox.hpp"
#include "lt3d/error.hpp"
#include "lt3d/image.hpp"
#include "lt3d/meshless.hpp"
#include "lt3d/snapping.hpp"
#include "lt3d/tpsrpm.hpp"

namespace lt3d {
namespace {

RgbaImage wire_png(const Json& j, const char* field) {
  if (!j.is_string()) throw Error(ErrorCode::kSchema, std::string(field) + " must be a base64 string");
  const std::vector<std::uint8_t> bytes = base64_decode(j.get_ref<const std::string&>());
  RgbaImage img = decode_png(bytes);
  if (img.width > kMaxWireImageSide || img.height > kMaxWireImageSide) {
    throw Error(ErrorCode::kInvalidArgument, std::string(field) + " is too large");
  }
  return img;
}

Json handle_registration(const Json& req) {
  const Eigen::Matrix3Xd source = points_from_json(req.at("source"));
  const Eigen::Matrix3Xd target = points_from_json(req.at("target"));
  if (static_cast<std::size_t>(source.cols()) > kMaxWirePoints) {
    throw Error(ErrorCode::kInvalidArgument, "too many points");
  }
  return matrix4_to_json(tpsrpm(source, target).transform);
}

Json handle_2d(const Json& req) {
  const Eigen::Matrix3Xd source = points_from_json(req.at("source"));
  const Eigen::Matrix2Xd clicks = pixels_from_json(req.at("clicks"));
  if (source.cols() != 3 || clicks.cols() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "2D placement takes exactly three points and three clicks");
  }
  const Intrinsics k = intrinsics_from_json(req.at("intrinsics"));
  const Extrinsics e = matrix4_from_json(req.at("extrinsics"));
  if (!is_valid_extrinsics(e, 1e-6)) throw Error(ErrorCode::kInvalidArgument, "extrinsics are not rigid");
  return matrix4_to_json(solve_placement(k, e, clicks, source).transform);
}

Json handle_bbox(const Json& req) {
  MaskImage mask;
  mask.image = wire_png(req.at("mask"), "mask");
  const Json& shot = req.at("shotId");
  if (!shot.is_number_integer()) throw Error(ErrorCode::kSchema, "shotId must be an integer");
  mask.shot_id = shot.get<int>();
  const Json& colors = req.at("colors");
  if (!colors.is_object()) throw Error(ErrorCode::kSchema, "colors must map object ids to colors");
  for (const auto& [key, value] : colors.items()) {
    std::size_t used = 0;
    ObjectId id = 0;
    try {
      id = std::stoll(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || key.empty()) throw Error(ErrorCode::kSchema, "object ids must be integers");
    const Rgba c = opaque(rgba_from_json(value));
    if (c[0] == 0 && c[1] == 0 && c[2] == 0) throw Error(ErrorCode::kInvalidArgument, "black is the background");
    if (!mask.colors.emplace(c, id).second) throw Error(ErrorCode::kDuplicate, "two objects share a color");
  }
  int width = mask.image.width, height = mask.image.height;
  if (req.contains("imageWidth") || req.contains("imageHeight")) {
    const Json& w = req.at("imageWidth");
    const Json& h = req.at("imageHeight");
    if (!w.is_number_integer() || !h.is_number_integer()) throw Error(ErrorCode::kSchema, "image size must be integral");
    width = w.get<int>();
    height = h.get<int>();
    if (width <= 0 || height <= 0 || width > 1 << 16 || height > 1 << 16) {
      throw Error(ErrorCode::kInvalidArgument, "bad image size");
    }
  }
  Json result = Json::object();
  for (const auto& [id, rect] : bbox_from_mask(mask, width, height)) {
    result[std::to_string(id)] = {{"shotId", mask.shot_id},
                                  {"min", {rect.min.x(), rect.min.y()}},
                                  {"max", {rect.max.x(), rect.max.y()}}};
  }
  return result;
}

Json handle_snap(const Json& req) {
  const RgbaImage scene = wire_png(req.at("sceneDepth"), "sceneDepth");
  const RgbaImage element = wire_png(req.at("elementDepth"), "elementDepth");
  const Intrinsics k = intrinsics_from_json(req.at("intrinsics"));
  const Extrinsics e = matrix4_from_json(req.at("extrinsics"));
  if (!is_valid_extrinsics(e, 1e-6)) throw Error(ErrorCode::kInvalidArgument, "extrinsics are not rigid");
  return matrix4_to_json(snap(scene, element, k, e).transform);
}

Json error_json(std::string_view code, std::string_view message) {
  return {{"status", "error"}, {"error", {{"code", code}, {"message", message}}}};
}

}  // namespace

std::vector<std::uint8_t> encode_frame(std::string_view body) {
  if (body.size() > kMaxFrameBytes) throw Error(ErrorCode::kInvalidArgument, "frame too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                                static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() - offset_ < 4) return std::nullopt;
  const std::uint8_t* p = buffer_.data() + offset_;
  const std::size_t n = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) | (std::size_t{p[2]} << 8) | p[3];
  if (n > max_frame_) throw Error(ErrorCode::kParse, "frame length exceeds the limit");
  if (buffer_.size() - offset_ - 4 < n) return std::nullopt;
  std::string body(reinterpret_cast<const char*>(p + 4), n);
  offset_ += 4 + n;
  if (offset_ > (std::size_t{1} << 20)) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
  return body;
}

Json dispatch(const Json& request) {
  Json response;
  try {
    if (!request.is_object()) throw Error(ErrorCode::kSchema, "request must be a JSON object");
    const Json& type = request.at("type");
    if (!type.is_string()) throw Error(ErrorCode::kSchema, "type must be a string");
    const std::string& t = type.get_ref<const std::string&>();
    Json result;
    if (t == "registration") {
      result = handle_registration(request);
    } else if (t == "2D") {
      result = handle_2d(request);
    } else if (t == "bbox") {
      result = handle_bbox(request);
    } else if (t == "snap") {
      result = handle_snap(request);
    } else {
      throw Error(ErrorCode::kUnknownType, "unknown message type '" + t + "'");
    }
    response = {{"status", "ok"}, {"result", std::move(result)}};
  } catch (const Error& e) {
    response = error_json(to_string(e.code()), e.what());
  } catch (const Json::exception& e) {
    response = error_json(to_string(ErrorCode::kSchema), e.what());
  }
  // Only scalar ids are echoed; copying nested values recurses.
  if (request.is_object() && request.contains("id") && request["id"].is_primitive()) response["id"] = request["id"];
  return response;
}

std::string dump_json(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

std::string error_response(std::string_view code, std::string_view message) {
  return dump_json(error_json(code, message));
}

std::string handle_message(std::string_view body) {
  try {
    Json request;
    try {
      request = Json::parse(body);
    } catch (const Json::parse_error& e) {
      return error_response(to_string(ErrorCode::kParse), e.what());
    }
    return dump_json(dispatch(request));
  } catch (const std::exception& e) {
    return error_response("internal_error", e.what());
  }
}

}  // namespace lt3d
