#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amodal/attention.hpp"
#include "amodal/grabcut.hpp"
#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

struct FloatImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> values;

  float at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

enum class ThresholdMode { Fixed, Otsu };

struct AlphaConfig {
  ThresholdMode mode = ThresholdMode::Fixed;
  double threshold = 0.4;
  bool fuse_visible = true;
  bool use_self_refined = false;
  int grabcut_iters = 5;
  std::size_t erode_fg = 3;
  std::size_t dilate_bg_band = 20;
  /// Forwarded to the attention producer; the bundle arrives already averaged.
  int attn_last_n = 15;
  std::size_t gmm_components = 5;
  double gamma = 50.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Bilinear resampling with half-pixel centres and edge clamping.
FloatImage upsample_attention(const AttentionBundle& b, std::size_t width, std::size_t height,
                              bool use_self_refined);
/// Rescales to [0,1]; constant maps are returned unchanged.
FloatImage normalize_min_max(const FloatImage& m);

/// 256-bin histogram index of a value in [0,1].
std::size_t histogram_bin(float v);
/// Smallest bin t in [1,255] maximizing between-class variance for classes
/// {bin < t} and {bin >= t}. A single-bin histogram yields max(bin, 1).
std::size_t otsu_bin(const FloatImage& m);

BinaryMask threshold_map(const FloatImage& m, const AlphaConfig& cfg);
BinaryMask fuse_with_visible(const BinaryMask& coarse, const BinaryMask& visible_canvas);

/// Sure-FG = eroded mask, probable-FG = rest of the mask, sure-BG outside the
/// dilated band, probable-BG in between.
Trimap build_trimap(const BinaryMask& fused, const AlphaConfig& cfg);
BinaryMask refine_alpha(const Image& img, const BinaryMask& fused, const AlphaConfig& cfg,
                        std::vector<std::string>* warnings = nullptr);

Image compose_rgba(const Image& completed, const BinaryMask& alpha);

struct AlphaExtraction {
  BinaryMask coarse;
  BinaryMask fused;
  BinaryMask alpha;
  std::vector<std::string> warnings;
};

AlphaExtraction extract_alpha(const Image& completed, const AttentionBundle& bundle,
                              const BinaryMask& visible_canvas, const AlphaConfig& cfg);

}  // namespace amodal
