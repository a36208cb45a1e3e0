#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "amodal/mask.hpp"

namespace amodal {

struct Color {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;
  friend bool operator==(const Color&, const Color&) = default;
};

inline constexpr Color kWhite{255, 255, 255};

/// Interleaved 8-bit image. 1 (gray), 3 (RGB) or 4 (RGBA) channels.
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, std::size_t channels);
  Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> samples);
  static Image filled(std::size_t width, std::size_t height, Color c);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  bool empty() const noexcept { return samples_.empty(); }

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return samples_.data() + (y * width_ + x) * channels_; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return samples_.data() + (y * width_ + x) * channels_;
  }
  /// RGB of a 3- or 4-channel image; gray is replicated.
  Color color_at(std::size_t x, std::size_t y) const;
  void set_color(std::size_t x, std::size_t y, Color c);

  std::span<const std::uint8_t> samples() const noexcept { return samples_; }
  std::span<std::uint8_t> samples() noexcept { return samples_; }

  bool same_dims(const Image& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
  bool same_dims(const BinaryMask& m) const noexcept { return width_ == m.width() && height_ == m.height(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> samples_;
};

Image to_rgb(const Image& img);
Image crop(const Image& img, const Rect& r);
BinaryMask crop(const BinaryMask& m, const Rect& r);

/// Visible-only image: pixels under `visible` keep their color, everything else becomes `bg`.
Image extract_visible(const Image& img, const BinaryMask& visible, Color bg = kWhite);
/// Lays `vis_only` into the expanded canvas at the placement offset over a `bg` fill.
Image place_on_canvas(const Image& vis_only, const CanvasPlacement& p, Color bg = kWhite);
/// The original-frame rectangle inside the canvas.
Rect footprint(const CanvasPlacement& p);

}  // namespace amodal
