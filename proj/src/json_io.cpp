#include "lt3d/json_io.hpp"

#include <cmath>

#include "lt3d/error.hpp"

namespace lt3d {
namespace {

double number(const Json& j) {
  if (!j.is_number()) throw Error(ErrorCode::kSchema, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::kSchema, "non-finite number");
  return v;
}

void require_array(const Json& j, std::size_t size, const char* what) {
  if (!j.is_array() || (size != 0 && j.size() != size)) {
    throw Error(ErrorCode::kSchema, std::string("malformed ") + what);
  }
}

}  // namespace

Json matrix4_to_json(const Eigen::Matrix4d& m) {
  Json out = Json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::Matrix4d matrix4_from_json(const Json& j) {
  require_array(j, 16, "4x4 matrix");
  Eigen::Matrix4d m;
  for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = number(j[static_cast<std::size_t>(i)]);
  return m;
}

Json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"s", k.s}, {"x0", k.x0},
          {"y0", k.y0}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "intrinsics must be an object");
  Intrinsics k;
  try {
    k.fx = number(j.at("fx"));
    k.fy = number(j.at("fy"));
    k.s = j.contains("s") ? number(j.at("s")) : 0.0;
    k.x0 = number(j.at("x0"));
    k.y0 = number(j.at("y0"));
    const Json& w = j.at("width");
    const Json& h = j.at("height");
    if (!w.is_number_integer() || !h.is_number_integer()) throw Error(ErrorCode::kSchema, "image size must be integral");
    k.width = w.get<int>();
    k.height = h.get<int>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("intrinsics: ") + e.what());
  }
  validate(k);
  return k;
}

Json points_to_json(const Eigen::Matrix3Xd& points) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < points.cols(); ++i) out.push_back({points(0, i), points(1, i), points(2, i)});
  return out;
}

Eigen::Matrix3Xd points_from_json(const Json& j) {
  require_array(j, 0, "point list");
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = vec3_from_json(j[i]);
  return out;
}

Eigen::Matrix2Xd pixels_from_json(const Json& j) {
  require_array(j, 0, "pixel list");
  Eigen::Matrix2Xd out(2, static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require_array(j[i], 2, "pixel");
    out.col(static_cast<Eigen::Index>(i)) << number(j[i][0]), number(j[i][1]);
  }
  return out;
}

Json pixels_to_json(const Eigen::Matrix2Xd& pixels) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < pixels.cols(); ++i) out.push_back({pixels(0, i), pixels(1, i)});
  return out;
}

Json rgba_to_json(const Rgba& c) { return {c[0], c[1], c[2], c[3]}; }

Rgba rgba_from_json(const Json& j) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 4)) throw Error(ErrorCode::kSchema, "malformed color");
  Rgba c{0, 0, 0, 255};
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) throw Error(ErrorCode::kSchema, "color channels must be integers");
    const auto v = j[i].get<long long>();
    if (v < 0 || v > 255) throw Error(ErrorCode::kSchema, "color channel out of range");
    c[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

Eigen::Vector3d vec3_from_json(const Json& j) {
  require_array(j, 3, "3-vector");
  return {number(j[0]), number(j[1]), number(j[2])};
}

Json vec3_to_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace lt3d
