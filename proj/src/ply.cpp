#include "lt3d/ply.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lt3d/error.hpp"

namespace lt3d {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::kParse, "ply: " + what); }

std::size_t scalar_size(PlyScalar t) {
  switch (t) {
    case PlyScalar::kInt8:
    case PlyScalar::kUInt8: return 1;
    case PlyScalar::kInt16:
    case PlyScalar::kUInt16: return 2;
    case PlyScalar::kInt32:
    case PlyScalar::kUInt32:
    case PlyScalar::kFloat32: return 4;
    case PlyScalar::kFloat64: return 8;
  }
  return 0;
}

bool is_integer(PlyScalar t) { return t != PlyScalar::kFloat32 && t != PlyScalar::kFloat64; }

PlyScalar parse_scalar(const std::string& s) {
  if (s == "char" || s == "int8") return PlyScalar::kInt8;
  if (s == "uchar" || s == "uint8") return PlyScalar::kUInt8;
  if (s == "short" || s == "int16") return PlyScalar::kInt16;
  if (s == "ushort" || s == "uint16") return PlyScalar::kUInt16;
  if (s == "int" || s == "int32") return PlyScalar::kInt32;
  if (s == "uint" || s == "uint32") return PlyScalar::kUInt32;
  if (s == "float" || s == "float32") return PlyScalar::kFloat32;
  if (s == "double" || s == "float64") return PlyScalar::kFloat64;
  fail("unknown scalar type '" + s + "'");
}

template <typename T>
T load(const std::uint8_t* p, bool swap) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), p, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  return std::bit_cast<T>(raw);
}

/// Sequential reader over the body in either encoding.
class BodyReader {
 public:
  BodyReader(std::span<const std::uint8_t> body, PlyEncoding encoding)
      : body_(body), encoding_(encoding) {
    swap_ = (encoding == PlyEncoding::kBinaryBigEndian) == (std::endian::native == std::endian::little);
  }

  double read(PlyScalar t) {
    if (encoding_ == PlyEncoding::kAscii) return read_ascii(t);
    const std::size_t n = scalar_size(t);
    if (pos_ + n > body_.size()) fail("truncated body");
    const std::uint8_t* p = body_.data() + pos_;
    pos_ += n;
    switch (t) {
      case PlyScalar::kInt8: return static_cast<std::int8_t>(*p);
      case PlyScalar::kUInt8: return *p;
      case PlyScalar::kInt16: return load<std::int16_t>(p, swap_);
      case PlyScalar::kUInt16: return load<std::uint16_t>(p, swap_);
      case PlyScalar::kInt32: return load<std::int32_t>(p, swap_);
      case PlyScalar::kUInt32: return load<std::uint32_t>(p, swap_);
      case PlyScalar::kFloat32: return load<float>(p, swap_);
      case PlyScalar::kFloat64: return load<double>(p, swap_);
    }
    return 0.0;
  }

  std::size_t position() const { return pos_; }

 private:
  double read_ascii(PlyScalar t) {
    while (pos_ < body_.size() && std::isspace(body_[pos_])) ++pos_;
    if (pos_ >= body_.size()) fail("truncated body");
    const char* first = reinterpret_cast<const char*>(body_.data() + pos_);
    const char* last = reinterpret_cast<const char*>(body_.data() + body_.size());
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || (ptr < last && !std::isspace(static_cast<unsigned char>(*ptr)))) {
      fail("malformed number in body");
    }
    if (is_integer(t) && value != std::floor(value)) fail("non-integer value for integer property");
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

  std::span<const std::uint8_t> body_;
  PlyEncoding encoding_;
  bool swap_ = false;
  std::size_t pos_ = 0;
};

int index_of(const PlyElement& e, std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    for (const char* n : names) {
      if (e.properties[i].name == n && !e.properties[i].is_list) return static_cast<int>(i);
    }
  }
  return -1;
}

std::uint8_t to_color_byte(double v, PlyScalar t) {
  if (is_integer(t)) return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

const PlyElement* PlyHeader::find(const std::string& name) const {
  for (const auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

PlyHeader parse_ply_header(std::span<const std::uint8_t> bytes) {
  PlyHeader header;
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) -> bool {
    if (pos >= bytes.size()) return false;
    const auto* begin = bytes.data() + pos;
    const auto* end = bytes.data() + bytes.size();
    const auto* nl = std::find(begin, end, std::uint8_t('\n'));
    line.assign(reinterpret_cast<const char*>(begin), reinterpret_cast<const char*>(nl));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = static_cast<std::size_t>(nl - bytes.data()) + (nl == end ? 0 : 1);
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "ply") fail("missing 'ply' magic");
  bool have_format = false;
  bool done = false;
  while (next_line(line)) {
    std::istringstream in(line);
    std::string keyword;
    in >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") {
      done = true;
      break;
    }
    if (keyword == "format") {
      std::string fmt, version;
      in >> fmt >> version;
      if (fmt == "ascii") header.encoding = PlyEncoding::kAscii;
      else if (fmt == "binary_little_endian") header.encoding = PlyEncoding::kBinaryLittleEndian;
      else if (fmt == "binary_big_endian") header.encoding = PlyEncoding::kBinaryBigEndian;
      else throw Error(ErrorCode::kParse, "ply: unsupported encoding '" + fmt + "'");
      have_format = true;
    } else if (keyword == "element") {
      PlyElement e;
      long long count = -1;
      in >> e.name >> count;
      if (e.name.empty() || in.fail() || count < 0) fail("malformed element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) fail("property before any element");
      PlyProperty p;
      std::string type;
      in >> type;
      if (type == "list") {
        std::string count_type, item_type;
        in >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(count_type);
        if (!is_integer(p.count_type)) fail("list count type must be an integer kind");
        p.type = parse_scalar(item_type);
      } else {
        p.type = parse_scalar(type);
        in >> p.name;
      }
      if (p.name.empty()) fail("property without a name");
      auto& props = header.elements.back().properties;
      if (std::any_of(props.begin(), props.end(), [&](const PlyProperty& q) { return q.name == p.name; })) {
        fail("duplicate property '" + p.name + "'");
      }
      props.push_back(std::move(p));
    } else {
      fail("unexpected header keyword '" + keyword + "'");
    }
  }
  if (!done) fail("missing end_header");
  if (!have_format) fail("missing format line");
  header.body_offset = pos;
  return header;
}

PlyModel parse_ply(std::span<const std::uint8_t> bytes) {
  const PlyHeader header = parse_ply_header(bytes);
  BodyReader reader(bytes.subspan(header.body_offset), header.encoding);

  const PlyElement* vertex_el = header.find("vertex");
  const bool has_faces = header.find("face") != nullptr;

  Eigen::Matrix3Xd vertices(3, vertex_el ? static_cast<Eigen::Index>(vertex_el->count) : 0);
  Colors colors;
  Eigen::Matrix3Xd normals;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<int> polygon_of_face;
  bool any_polygon = false;
  int polygon_index = 0;

  for (const PlyElement& el : header.elements) {
    if (&el == vertex_el) {
      const int ix = index_of(el, {"x"}), iy = index_of(el, {"y"}), iz = index_of(el, {"z"});
      if (ix < 0 || iy < 0 || iz < 0) fail("vertex element lacks x/y/z");
      const int ir = index_of(el, {"red", "r", "diffuse_red"});
      const int ig = index_of(el, {"green", "g", "diffuse_green"});
      const int ib = index_of(el, {"blue", "b", "diffuse_blue"});
      const int ia = index_of(el, {"alpha", "a"});
      const int inx = index_of(el, {"nx"}), iny = index_of(el, {"ny"}), inz = index_of(el, {"nz"});
      const bool with_color = ir >= 0 && ig >= 0 && ib >= 0;
      const bool with_normal = inx >= 0 && iny >= 0 && inz >= 0;
      if (with_color) colors.resize(4, vertices.cols());
      if (with_normal) normals.resize(3, vertices.cols());
      std::vector<double> row(el.properties.size());
      for (std::size_t v = 0; v < el.count; ++v) {
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          const PlyProperty& prop = el.properties[p];
          if (prop.is_list) {
            const auto n = static_cast<std::size_t>(reader.read(prop.count_type));
            for (std::size_t k = 0; k < n; ++k) reader.read(prop.type);
            row[p] = 0.0;
          } else {
            row[p] = reader.read(prop.type);
          }
        }
        const auto c = static_cast<Eigen::Index>(v);
        vertices.col(c) << row[ix], row[iy], row[iz];
        if (with_color) {
          colors(0, c) = to_color_byte(row[ir], el.properties[ir].type);
          colors(1, c) = to_color_byte(row[ig], el.properties[ig].type);
          colors(2, c) = to_color_byte(row[ib], el.properties[ib].type);
          colors(3, c) = ia >= 0 ? to_color_byte(row[ia], el.properties[ia].type) : 255;
        }
        if (with_normal) normals.col(c) << row[inx], row[iny], row[inz];
      }
    } else if (el.name == "face") {
      int list_prop = -1;
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        const auto& prop = el.properties[p];
        if (prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
          list_prop = static_cast<int>(p);
        }
      }
      if (list_prop < 0) fail("face element lacks a vertex_indices list");
      if (!is_integer(el.properties[list_prop].type)) fail("face indices must be integers");
      std::vector<int> corners;
      for (std::size_t f = 0; f < el.count; ++f) {
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          const PlyProperty& prop = el.properties[p];
          if (!prop.is_list) {
            reader.read(prop.type);
            continue;
          }
          const double count = reader.read(prop.count_type);
          if (count < 0) fail("negative list count");
          const auto n = static_cast<std::size_t>(count);
          if (static_cast<int>(p) != list_prop) {
            for (std::size_t k = 0; k < n; ++k) reader.read(prop.type);
            continue;
          }
          corners.clear();
          for (std::size_t k = 0; k < n; ++k) {
            const double idx = reader.read(prop.type);
            if (idx < 0 || idx >= static_cast<double>(vertices.cols())) fail("face index out of range");
            corners.push_back(static_cast<int>(idx));
          }
          if (n < 3) continue;
          if (n > 3) any_polygon = true;
          for (std::size_t k = 1; k + 1 < n; ++k) {
            triangles.emplace_back(corners[0], corners[k], corners[k + 1]);
            polygon_of_face.push_back(polygon_index);
          }
          ++polygon_index;
        }
      }
    } else {
      for (std::size_t i = 0; i < el.count; ++i) {
        for (const PlyProperty& prop : el.properties) {
          if (prop.is_list) {
            const auto n = static_cast<std::size_t>(reader.read(prop.count_type));
            for (std::size_t k = 0; k < n; ++k) reader.read(prop.type);
          } else {
            reader.read(prop.type);
          }
        }
      }
    }
  }

  if (!has_faces) return PointCloud{std::move(vertices), std::move(colors)};

  TriangleMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.colors = std::move(colors);
  mesh.normals = std::move(normals);
  mesh.faces.resize(3, static_cast<Eigen::Index>(triangles.size()));
  for (std::size_t i = 0; i < triangles.size(); ++i) mesh.faces.col(static_cast<Eigen::Index>(i)) = triangles[i];
  if (any_polygon) mesh.polygon_of_face = std::move(polygon_of_face);
  return mesh;
}

PlyModel read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_ply(bytes);
}

namespace {

class BodyWriter {
 public:
  BodyWriter(std::vector<std::uint8_t>& out, PlyEncoding encoding) : out_(out), encoding_(encoding) {}

  template <typename T>
  void put(T value, bool last_in_row = false) {
    if (encoding_ == PlyEncoding::kAscii) {
      std::ostringstream s;
      s.precision(17);
      if constexpr (sizeof(T) == 1) s << static_cast<int>(value);
      else s << value;
      const std::string text = s.str() + (last_in_row ? "\n" : " ");
      out_.insert(out_.end(), text.begin(), text.end());
      return;
    }
    std::array<std::uint8_t, sizeof(T)> raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
    const bool swap = (encoding_ == PlyEncoding::kBinaryBigEndian) == (std::endian::native == std::endian::little);
    if (swap) std::reverse(raw.begin(), raw.end());
    out_.insert(out_.end(), raw.begin(), raw.end());
  }

 private:
  std::vector<std::uint8_t>& out_;
  PlyEncoding encoding_;
};

std::vector<std::uint8_t> write_impl(const Eigen::Matrix3Xd& vertices, const Colors* colors,
                                     const Eigen::Matrix3Xd* normals, const Eigen::Matrix3Xi* faces,
                                     const PlyWriteOptions& options) {
  const char* format = options.encoding == PlyEncoding::kAscii               ? "ascii"
                       : options.encoding == PlyEncoding::kBinaryLittleEndian ? "binary_little_endian"
                                                                             : "binary_big_endian";
  const char* real = options.double_precision ? "double" : "float";
  std::ostringstream h;
  h << "ply\nformat " << format << " 1.0\n";
  h << "element vertex " << vertices.cols() << "\n";
  h << "property " << real << " x\nproperty " << real << " y\nproperty " << real << " z\n";
  if (normals) h << "property " << real << " nx\nproperty " << real << " ny\nproperty " << real << " nz\n";
  if (colors) h << "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n";
  if (faces) h << "element face " << faces->cols() << "\nproperty list uchar int vertex_indices\n";
  h << "end_header\n";
  const std::string head = h.str();
  std::vector<std::uint8_t> out(head.begin(), head.end());

  BodyWriter w(out, options.encoding);
  auto put_real = [&](double v, bool last) {
    if (options.double_precision) w.put<double>(v, last);
    else w.put<float>(static_cast<float>(v), last);
  };
  for (Eigen::Index i = 0; i < vertices.cols(); ++i) {
    const bool tail = !normals && !colors;
    put_real(vertices(0, i), false);
    put_real(vertices(1, i), false);
    put_real(vertices(2, i), tail);
    if (normals) {
      put_real((*normals)(0, i), false);
      put_real((*normals)(1, i), false);
      put_real((*normals)(2, i), !colors);
    }
    if (colors) {
      for (int c = 0; c < 4; ++c) w.put<std::uint8_t>((*colors)(c, i), c == 3);
    }
  }
  if (faces) {
    for (Eigen::Index f = 0; f < faces->cols(); ++f) {
      w.put<std::uint8_t>(3);
      for (int c = 0; c < 3; ++c) w.put<std::int32_t>((*faces)(c, f), c == 2);
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_ply(const TriangleMesh& mesh, const PlyWriteOptions& options) {
  validate_mesh(mesh);
  return write_impl(mesh.vertices, mesh.has_colors() ? &mesh.colors : nullptr,
                    mesh.has_normals() ? &mesh.normals : nullptr, &mesh.faces, options);
}

std::vector<std::uint8_t> serialize_ply(const PointCloud& cloud, const PlyWriteOptions& options) {
  const bool colored = cloud.colors.cols() == cloud.points.cols() && cloud.colors.cols() > 0;
  return write_impl(cloud.points, colored ? &cloud.colors : nullptr, nullptr, nullptr, options);
}

}  // namespace lt3d
