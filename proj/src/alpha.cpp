#include "amodal/alpha.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "amodal/error.hpp"

namespace amodal {

void AlphaConfig::validate() const {
  if (mode == ThresholdMode::Fixed && !(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("alpha threshold must lie in (0,1)");
  }
  if (grabcut_iters < 0) throw ValidationError("grabcut_iters must be >= 0");
  if (attn_last_n < 1) throw ValidationError("attn_last_n must be >= 1");
  if (gmm_components < 1) throw ValidationError("gmm_components must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
}

FloatImage upsample_attention(const AttentionBundle& b, std::size_t width, std::size_t height,
                              bool use_self_refined) {
  if (width == 0 || height == 0) throw ValidationError("upsample_attention: zero target dimension");
  b.validate();
  if (use_self_refined && !b.self_refined) throw ValidationError("upsample_attention: bundle has no self_refined map");
  const std::vector<float>& grid = use_self_refined ? *b.self_refined : b.cross;
  const std::size_t lw = b.latent_width, lh = b.latent_height;

  auto source_coord = [](std::size_t i, std::size_t dst, std::size_t src) {
    const double s = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(src - 1));
  };

  FloatImage out{width, height, std::vector<float>(width * height)};
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = source_coord(y, height, lh);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, lh - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = source_coord(x, width, lw);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, lw - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = (1 - fx) * grid[y0 * lw + x0] + fx * grid[y0 * lw + x1];
      const double bot = (1 - fx) * grid[y1 * lw + x0] + fx * grid[y1 * lw + x1];
      out.values[y * width + x] = static_cast<float>(std::clamp((1 - fy) * top + fy * bot, 0.0, 1.0));
    }
  }
  return out;
}

FloatImage normalize_min_max(const FloatImage& m) {
  const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
  if (lo == m.values.end() || *hi <= *lo) return m;
  FloatImage out = m;
  const float range = *hi - *lo;
  const float base = *lo;
  for (float& v : out.values) v = (v - base) / range;
  return out;
}

std::size_t histogram_bin(float v) {
  const double b = std::floor(static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 255.0 + 0.5);
  return static_cast<std::size_t>(std::min(b, 255.0));
}

std::size_t otsu_bin(const FloatImage& m) {
  std::array<double, 256> hist{};
  for (float v : m.values) hist[histogram_bin(v)] += 1.0;
  const double total = static_cast<double>(m.values.size());
  double sum_all = 0.0;
  for (std::size_t i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

  std::size_t best = 0;
  double best_var = -1.0;
  double w0 = 0.0, sum0 = 0.0;
  for (std::size_t t = 1; t < 256; ++t) {
    w0 += hist[t - 1];
    sum0 += static_cast<double>(t - 1) * hist[t - 1];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
    // Relative margin so rounding noise cannot move a tie off the smallest t.
    if (var > best_var * (1.0 + 1e-12)) {
      best_var = var;
      best = t;
    }
  }
  if (best == 0) {
    // Every sample sits in one bin.
    const auto occupied = static_cast<std::size_t>(
        std::find_if(hist.begin(), hist.end(), [](double c) { return c > 0.0; }) - hist.begin());
    return std::max<std::size_t>(occupied == 256 ? 255 : occupied, 1);
  }
  return best;
}

BinaryMask threshold_map(const FloatImage& m, const AlphaConfig& cfg) {
  BinaryMask out(m.width, m.height);
  if (cfg.mode == ThresholdMode::Otsu) {
    const std::size_t t = otsu_bin(m);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      if (histogram_bin(m.values[i]) >= t) out.set(i % m.width, i / m.width);
    }
    return out;
  }
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (m.values[i] >= cfg.threshold) out.set(i % m.width, i / m.width);
  }
  return out;
}

BinaryMask fuse_with_visible(const BinaryMask& coarse, const BinaryMask& visible_canvas) {
  return mask_union(coarse, visible_canvas);
}

Trimap build_trimap(const BinaryMask& fused, const AlphaConfig& cfg) {
  const BinaryMask sure_fg = erode(fused, {cfg.erode_fg});
  const BinaryMask band = dilate(fused, {cfg.dilate_bg_band});
  Trimap t(fused.width(), fused.height(), TrimapLabel::SureBG);
  for (std::size_t y = 0; y < fused.height(); ++y) {
    for (std::size_t x = 0; x < fused.width(); ++x) {
      if (sure_fg.at(x, y)) {
        t.set(x, y, TrimapLabel::SureFG);
      } else if (fused.at(x, y)) {
        t.set(x, y, TrimapLabel::ProbFG);
      } else if (band.at(x, y)) {
        t.set(x, y, TrimapLabel::ProbBG);
      }
    }
  }
  return t;
}

BinaryMask refine_alpha(const Image& img, const BinaryMask& fused, const AlphaConfig& cfg,
                        std::vector<std::string>* warnings) {
  if (!img.same_dims(fused)) throw DimensionError("refine_alpha: image and mask dims differ");
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  if (fused.empty()) {
    warn("refine_alpha: empty fused mask; refinement skipped");
    return fused;
  }
  if (cfg.grabcut_iters == 0) return fused;
  const Trimap trimap = build_trimap(fused, cfg);
  if (fused.count() == fused.size()) {
    warn("refine_alpha: mask covers the whole canvas; refinement skipped");
    return fused;
  }
  GrabCutParams params;
  params.iterations = cfg.grabcut_iters;
  params.components = cfg.gmm_components;
  params.gamma = cfg.gamma;
  params.seed = cfg.seed;
  GrabCutResult r = grabcut_run(to_rgb(img), trimap, params);
  for (auto& w : r.warnings) warn(std::move(w));
  return r.mask;
}

Image compose_rgba(const Image& completed, const BinaryMask& alpha) {
  if (!completed.same_dims(alpha)) throw DimensionError("compose_rgba: image and alpha dims differ");
  Image out(completed.width(), completed.height(), 4);
  for (std::size_t y = 0; y < completed.height(); ++y) {
    for (std::size_t x = 0; x < completed.width(); ++x) {
      const Color c = completed.color_at(x, y);
      std::uint8_t* p = out.pixel(x, y);
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
      p[3] = alpha.at(x, y) ? 255 : 0;
    }
  }
  return out;
}

AlphaExtraction extract_alpha(const Image& completed, const AttentionBundle& bundle,
                              const BinaryMask& visible_canvas, const AlphaConfig& cfg) {
  cfg.validate();
  if (!completed.same_dims(visible_canvas)) throw DimensionError("extract_alpha: image and visible mask dims differ");
  AlphaExtraction out{BinaryMask(1, 1), BinaryMask(1, 1), BinaryMask(1, 1), {}};
  bool self_refined = cfg.use_self_refined;
  if (self_refined && !bundle.self_refined) {
    out.warnings.push_back("extract_alpha: self_refined map unavailable; using cross attention");
    self_refined = false;
  }
  const FloatImage heat =
      normalize_min_max(upsample_attention(bundle, completed.width(), completed.height(), self_refined));
  out.coarse = threshold_map(heat, cfg);
  out.fused = cfg.fuse_visible ? fuse_with_visible(out.coarse, visible_canvas) : out.coarse;
  out.alpha = refine_alpha(completed, out.fused, cfg, &out.warnings);
  return out;
}

}  // namespace amodal
