#include "amodal/image.hpp"

#include <algorithm>
#include <string>

#include "amodal/error.hpp"

namespace amodal {

Image::Image(std::size_t width, std::size_t height, std::size_t channels)
    : Image(width, height, channels, std::vector<std::uint8_t>(width * height * channels, 0)) {}

Image::Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
  if (width == 0 || height == 0) throw ValidationError("Image: zero dimension");
  if (channels != 1 && channels != 3 && channels != 4) {
    throw ValidationError("Image: unsupported channel count " + std::to_string(channels));
  }
  if (samples_.size() != width * height * channels) throw DimensionError("Image: sample count mismatch");
}

Image Image::filled(std::size_t width, std::size_t height, Color c) {
  Image img(width, height, 3);
  for (std::size_t i = 0; i < width * height; ++i) {
    img.samples_[3 * i] = c.r;
    img.samples_[3 * i + 1] = c.g;
    img.samples_[3 * i + 2] = c.b;
  }
  return img;
}

Color Image::color_at(std::size_t x, std::size_t y) const {
  const std::uint8_t* p = pixel(x, y);
  if (channels_ == 1) return {p[0], p[0], p[0]};
  return {p[0], p[1], p[2]};
}

void Image::set_color(std::size_t x, std::size_t y, Color c) {
  std::uint8_t* p = pixel(x, y);
  if (channels_ == 1) {
    p[0] = static_cast<std::uint8_t>((299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000);
    return;
  }
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) out.set_color(x, y, img.color_at(x, y));
  }
  return out;
}

Image crop(const Image& img, const Rect& r) {
  if (r.x + r.width > img.width() || r.y + r.height > img.height()) {
    throw DimensionError("crop: rectangle exceeds image bounds");
  }
  Image out(r.width, r.height, img.channels());
  const std::size_t row_bytes = r.width * img.channels();
  for (std::size_t y = 0; y < r.height; ++y) {
    std::copy_n(img.pixel(r.x, r.y + y), row_bytes, out.pixel(0, y));
  }
  return out;
}

BinaryMask crop(const BinaryMask& m, const Rect& r) {
  if (r.x + r.width > m.width() || r.y + r.height > m.height()) {
    throw DimensionError("crop: rectangle exceeds mask bounds");
  }
  BinaryMask out(r.width, r.height);
  for (std::size_t y = 0; y < r.height; ++y) {
    for (std::size_t x = 0; x < r.width; ++x) out.set(x, y, m.at(r.x + x, r.y + y));
  }
  return out;
}

Image extract_visible(const Image& img, const BinaryMask& visible, Color bg) {
  if (!img.same_dims(visible)) throw DimensionError("extract_visible: image and mask dims differ");
  Image out = Image::filled(img.width(), img.height(), bg);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      if (visible.at(x, y)) out.set_color(x, y, img.color_at(x, y));
    }
  }
  return out;
}

Image place_on_canvas(const Image& vis_only, const CanvasPlacement& p, Color bg) {
  if (vis_only.width() != p.orig_width || vis_only.height() != p.orig_height) {
    throw DimensionError("place_on_canvas: image dims do not match placement original dims");
  }
  const Image rgb = to_rgb(vis_only);
  Image out = Image::filled(p.new_width, p.new_height, bg);
  const std::size_t row_bytes = p.orig_width * 3;
  for (std::size_t y = 0; y < p.orig_height; ++y) {
    std::copy_n(rgb.pixel(0, y), row_bytes, out.pixel(p.offset_x, p.offset_y + y));
  }
  return out;
}

Rect footprint(const CanvasPlacement& p) { return {p.offset_x, p.offset_y, p.orig_width, p.orig_height}; }

}  // namespace amodal
