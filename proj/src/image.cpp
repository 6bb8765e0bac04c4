#include "lt3d/image.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "lt3d/error.hpp"

namespace lt3d {

RgbaImage::RgbaImage(int w, int h, Rgba fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw Error(ErrorCode::kInvalidArgument, "negative image size");
  data.resize(4 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < data.size(); i += 4) std::memcpy(&data[i], fill.data(), 4);
}

RgbaImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kParse, "png: " + msg);
  }
  img.format = PNG_FORMAT_RGBA;
  if (img.width == 0 || img.height == 0 || img.width > 16384 || img.height > 16384) {
    png_image_free(&img);
    throw Error(ErrorCode::kParse, "png: unsupported image size");
  }
  RgbaImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kParse, "png: " + msg);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbaImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png: ") + img.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RgbaImage read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

void write_png(const std::filesystem::path& path, const RgbaImage& image) { write_file(path, encode_png(image)); }

}  // namespace lt3d
