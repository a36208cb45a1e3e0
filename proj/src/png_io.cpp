#include "amodal/png_io.hpp"

#include <png.h>

#include <cstring>
#include <memory>

#include "amodal/codec.hpp"
#include "amodal/error.hpp"

namespace amodal {

namespace {

struct PngImageGuard {
  png_image* img;
  ~PngImageGuard() { png_image_free(img); }
};

Image decode_with_format(const std::string& bytes, png_uint_32 format, std::size_t channels) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw IoError(std::string("png decode: ") + png.message);
  }
  png.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    throw IoError(std::string("png decode: ") + png.message);
  }
  return Image(png.width, png.height, channels, std::move(buf));
}

}  // namespace

Image decode_png(const std::string& bytes, bool keep_alpha) {
  png_image probe;
  std::memset(&probe, 0, sizeof probe);
  probe.version = PNG_IMAGE_VERSION;
  bool has_alpha = false;
  {
    PngImageGuard guard{&probe};
    if (!png_image_begin_read_from_memory(&probe, bytes.data(), bytes.size())) {
      throw IoError(std::string("png decode: ") + probe.message);
    }
    has_alpha = (probe.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  }
  if (keep_alpha && has_alpha) return decode_with_format(bytes, PNG_FORMAT_RGBA, 4);
  return decode_with_format(bytes, PNG_FORMAT_RGB, 3);
}

std::string encode_png(const Image& img) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  switch (img.channels()) {
    case 1: png.format = PNG_FORMAT_GRAY; break;
    case 3: png.format = PNG_FORMAT_RGB; break;
    case 4: png.format = PNG_FORMAT_RGBA; break;
    default: throw ValidationError("encode_png: unsupported channel count");
  }
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.samples().data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.samples().data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image load_png(const std::filesystem::path& path, bool keep_alpha) {
  return decode_png(read_file(path), keep_alpha);
}

void save_png(const Image& img, const std::filesystem::path& path) { write_file(path, encode_png(img)); }

BinaryMask decode_mask_png(const std::string& bytes) {
  const Image gray = decode_with_format(bytes, PNG_FORMAT_GRAY, 1);
  std::vector<std::uint8_t> bits(gray.samples().begin(), gray.samples().end());
  return BinaryMask(gray.width(), gray.height(), std::move(bits));
}

Image mask_to_gray(const BinaryMask& m) {
  std::vector<std::uint8_t> px(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) px[i] = m[i] ? 255 : 0;
  return Image(m.width(), m.height(), 1, std::move(px));
}

std::string encode_mask_png(const BinaryMask& m) { return encode_png(mask_to_gray(m)); }

BinaryMask load_mask_png(const std::filesystem::path& path) { return decode_mask_png(read_file(path)); }

void save_mask_png(const BinaryMask& m, const std::filesystem::path& path) {
  write_file(path, encode_mask_png(m));
}

}  // namespace amodal
