#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace amodal {

/// Row-major binary grid. Storage is one byte per pixel (0 or 1).
class BinaryMask {
 public:
  /// Placeholder with no pixels; every operation expects a constructed mask.
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, bool value = false);
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { bits_[y * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  bool same_dims(const BinaryMask& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  /// True iff every set pixel of this mask is also set in `o`.
  bool subset_of(const BinaryMask& o) const;
  BinaryMask complement() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Fractional canvas growth per side, relative to the original width/height.
struct ExpansionSpec {
  double left = 0.0;
  double right = 0.0;
  double top = 0.0;
  double bottom = 0.0;

  static constexpr double kMaxFraction = 2.0;

  bool is_zero() const noexcept { return left == 0 && right == 0 && top == 0 && bottom == 0; }
  /// Throws ValidationError unless every side is finite and within [0, kMaxFraction].
  void validate() const;
  friend bool operator==(const ExpansionSpec&, const ExpansionSpec&) = default;
};

/// Where the original frame sits inside the (possibly) expanded canvas.
struct CanvasPlacement {
  std::size_t orig_width = 0;
  std::size_t orig_height = 0;
  std::size_t new_width = 0;
  std::size_t new_height = 0;
  std::size_t offset_x = 0;
  std::size_t offset_y = 0;

  bool is_identity() const noexcept {
    return new_width == orig_width && new_height == orig_height && offset_x == 0 && offset_y == 0;
  }
  bool in_footprint(std::size_t x, std::size_t y) const noexcept {
    return x >= offset_x && x < offset_x + orig_width && y >= offset_y && y < offset_y + orig_height;
  }
  friend bool operator==(const CanvasPlacement&, const CanvasPlacement&) = default;
};

/// Euclidean disk of the given radius.
struct StructuringElement {
  std::size_t radius = 0;
};

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 1;
  std::size_t height = 1;
  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class Edge { Left, Right, Top, Bottom };
using EdgeSet = std::set<Edge>;

std::string to_string(Edge e);
/// Throws ValidationError for unknown names. Accepts "down"/"up" as aliases.
Edge edge_from_string(const std::string& name);

/// Half-up rounding used by all canvas arithmetic.
std::size_t round_half_up(double v);

CanvasPlacement compute_canvas(std::size_t orig_width, std::size_t orig_height, const ExpansionSpec& e);
BinaryMask boundary_mask(const CanvasPlacement& p);
BinaryMask place_mask(const BinaryMask& m, const CanvasPlacement& p);
BinaryMask dilate(const BinaryMask& m, StructuringElement se);
/// Morphological erosion with the same disk; pixels outside the grid count as set.
BinaryMask erode(const BinaryMask& m, StructuringElement se);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b);

/// Inpainting region: union of dilated occluders and the new boundary strip,
/// optionally excluding the (placed) visible mask.
BinaryMask compose_inpaint_mask(std::span<const BinaryMask> occluders, const BinaryMask& visible,
                                const CanvasPlacement& p, StructuringElement se, bool protect_visible);

std::optional<Rect> bbox(const BinaryMask& m);
EdgeSet edges_touched(const Rect& r, std::size_t width, std::size_t height, std::size_t tol);

/// max(5, round(0.015 * max(w, h))).
std::size_t default_dilation_radius(std::size_t orig_width, std::size_t orig_height);

double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace amodal
