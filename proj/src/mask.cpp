#include "amodal/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amodal/error.hpp"

namespace amodal {

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* op) {
  if (!a.same_dims(b)) {
    throw DimensionError(std::string(op) + ": mask dims " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

// Largest integer h with h*h <= r*r - dy*dy.
std::size_t disk_half_width(std::size_t r, std::size_t dy) {
  const std::size_t rem = r * r - dy * dy;
  auto h = static_cast<std::size_t>(std::sqrt(static_cast<double>(rem)));
  while (h * h > rem) --h;
  while ((h + 1) * (h + 1) <= rem) ++h;
  return h;
}

}  // namespace

BinaryMask::BinaryMask(std::size_t width, std::size_t height, bool value)
    : width_(width), height_(height), bits_(width * height, value ? 1 : 0) {
  if (width == 0 || height == 0) throw ValidationError("BinaryMask: zero dimension");
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width == 0 || height == 0) throw ValidationError("BinaryMask: zero dimension");
  if (bits_.size() != width * height) throw DimensionError("BinaryMask: bit count != width*height");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::subset_of(const BinaryMask& o) const {
  require_same_dims(*this, o, "subset_of");
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !o.bits_[i]) return false;
  }
  return true;
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out(width_, height_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
  return out;
}

void ExpansionSpec::validate() const {
  for (double v : {left, right, top, bottom}) {
    if (!std::isfinite(v) || v < 0.0 || v > kMaxFraction) {
      throw ValidationError("ExpansionSpec: fraction " + std::to_string(v) + " outside [0, 2]");
    }
  }
}

std::string to_string(Edge e) {
  switch (e) {
    case Edge::Left: return "left";
    case Edge::Right: return "right";
    case Edge::Top: return "top";
    case Edge::Bottom: return "bottom";
  }
  return "?";
}

Edge edge_from_string(const std::string& name) {
  if (name == "left") return Edge::Left;
  if (name == "right") return Edge::Right;
  if (name == "top" || name == "up") return Edge::Top;
  if (name == "bottom" || name == "down") return Edge::Bottom;
  throw ValidationError("unknown edge name '" + name + "'");
}

std::size_t round_half_up(double v) {
  // The epsilon absorbs products such as 100 * 0.005 landing just below .5.
  return static_cast<std::size_t>(std::floor(v + 0.5 + 1e-9));
}

CanvasPlacement compute_canvas(std::size_t orig_width, std::size_t orig_height, const ExpansionSpec& e) {
  if (orig_width == 0 || orig_height == 0) throw ValidationError("compute_canvas: zero dimension");
  e.validate();
  CanvasPlacement p;
  p.orig_width = orig_width;
  p.orig_height = orig_height;
  const auto w = static_cast<double>(orig_width);
  const auto h = static_cast<double>(orig_height);
  p.offset_x = round_half_up(w * e.left);
  p.offset_y = round_half_up(h * e.top);
  p.new_width = std::max(round_half_up(w * (1.0 + e.left + e.right)), p.offset_x + orig_width);
  p.new_height = std::max(round_half_up(h * (1.0 + e.top + e.bottom)), p.offset_y + orig_height);
  return p;
}

BinaryMask boundary_mask(const CanvasPlacement& p) {
  BinaryMask out(p.new_width, p.new_height);
  for (std::size_t y = 0; y < p.new_height; ++y) {
    for (std::size_t x = 0; x < p.new_width; ++x) {
      if (!p.in_footprint(x, y)) out.set(x, y);
    }
  }
  return out;
}

BinaryMask place_mask(const BinaryMask& m, const CanvasPlacement& p) {
  if (m.width() != p.orig_width || m.height() != p.orig_height) {
    throw DimensionError("place_mask: mask dims do not match placement original dims");
  }
  BinaryMask out(p.new_width, p.new_height);
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) {
      if (m.at(x, y)) out.set(x + p.offset_x, y + p.offset_y);
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& m, StructuringElement se) {
  const std::size_t r = se.radius;
  if (r == 0) return m;
  const std::size_t w = m.width();
  const std::size_t h = m.height();
  constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max();

  // Per-row horizontal distance to the nearest set pixel.
  std::vector<std::size_t> hdist(w * h, kFar);
  for (std::size_t y = 0; y < h; ++y) {
    std::size_t* row = hdist.data() + y * w;
    std::size_t last = kFar;
    for (std::size_t x = 0; x < w; ++x) {
      if (m.at(x, y)) last = x;
      if (last != kFar) row[x] = x - last;
    }
    last = kFar;
    for (std::size_t x = w; x-- > 0;) {
      if (m.at(x, y)) last = x;
      if (last != kFar) row[x] = std::min(row[x], last - x);
    }
  }

  std::vector<std::size_t> half(r + 1);
  for (std::size_t dy = 0; dy <= r; ++dy) half[dy] = disk_half_width(r, dy);

  BinaryMask out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t y0 = y >= r ? y - r : 0;
    const std::size_t y1 = std::min(h - 1, y + r);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t sy = y0; sy <= y1; ++sy) {
        const std::size_t dy = sy > y ? sy - y : y - sy;
        if (hdist[sy * w + x] <= half[dy]) {
          out.set(x, y);
          break;
        }
      }
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& m, StructuringElement se) {
  if (se.radius == 0) return m;
  // Pad so that out-of-grid pixels behave as set, then erode by duality.
  const std::size_t r = se.radius;
  BinaryMask padded(m.width() + 2 * r, m.height() + 2 * r);
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) padded.set(x + r, y + r);
    }
  }
  const BinaryMask grown = dilate(padded, se);
  BinaryMask out(m.width(), m.height());
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) {
      if (!grown.at(x + r, y + r)) out.set(x, y);
    }
  }
  return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b, "mask_union");
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (a[i] || b[i]) ? 1 : 0;
  return BinaryMask(a.width(), a.height(), std::move(bits));
}

BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b, "mask_subtract");
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (a[i] && !b[i]) ? 1 : 0;
  return BinaryMask(a.width(), a.height(), std::move(bits));
}

BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b, "mask_intersect");
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (a[i] && b[i]) ? 1 : 0;
  return BinaryMask(a.width(), a.height(), std::move(bits));
}

BinaryMask compose_inpaint_mask(std::span<const BinaryMask> occluders, const BinaryMask& visible,
                                const CanvasPlacement& p, StructuringElement se, bool protect_visible) {
  BinaryMask out = boundary_mask(p);
  for (const auto& occ : occluders) {
    out = mask_union(out, dilate(place_mask(occ, p), se));
  }
  const BinaryMask placed_visible = place_mask(visible, p);
  if (protect_visible) out = mask_subtract(out, placed_visible);
  return out;
}

std::optional<Rect> bbox(const BinaryMask& m) {
  std::size_t x0 = m.width(), y0 = m.height(), x1 = 0, y1 = 0;
  bool any = false;
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      any = true;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (!any) return std::nullopt;
  return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

EdgeSet edges_touched(const Rect& r, std::size_t width, std::size_t height, std::size_t tol) {
  EdgeSet edges;
  if (r.x <= tol) edges.insert(Edge::Left);
  if (r.y <= tol) edges.insert(Edge::Top);
  if (r.x + r.width + tol >= width) edges.insert(Edge::Right);
  if (r.y + r.height + tol >= height) edges.insert(Edge::Bottom);
  return edges;
}

std::size_t default_dilation_radius(std::size_t orig_width, std::size_t orig_height) {
  return std::max<std::size_t>(5, round_half_up(0.015 * static_cast<double>(std::max(orig_width, orig_height))));
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace amodal
