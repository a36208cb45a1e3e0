#include <doctest.h>

#include <random>

#include "amodal/alpha.hpp"
#include "amodal/error.hpp"
#include "oracles.hpp"

using namespace amodal;

namespace {

AttentionBundle grid(std::size_t w, std::size_t h, std::vector<float> v) {
  AttentionBundle b;
  b.latent_width = w;
  b.latent_height = h;
  b.cross = std::move(v);
  return b;
}

FloatImage from_bins(const std::vector<std::size_t>& bins, std::size_t width) {
  FloatImage m{width, bins.size() / width, {}};
  for (auto b : bins) m.values.push_back(static_cast<float>(b) / 255.0f);
  return m;
}

}  // namespace

TEST_CASE("upsample_attention trivial cases") {
  const auto one = upsample_attention(grid(1, 1, {0.7f}), 5, 3, false);
  for (float v : one.values) CHECK(v == doctest::Approx(0.7f));

  const std::vector<float> v{0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f};
  CHECK(upsample_attention(grid(3, 2, v), 3, 2, false).values == v);
  CHECK_THROWS_AS(upsample_attention(grid(1, 1, {0.5f}), 0, 3, false), ValidationError);
  CHECK_THROWS_AS(upsample_attention(grid(1, 1, {0.5f}), 2, 2, true), ValidationError);
}

TEST_CASE("upsample_attention 2x2 to 4x4 matches the hand-computed bilinear table") {
  // Source [[0, 1], [0.5, 0.25]]. With half-pixel centres the sample positions
  // along each axis are -0.25, 0.25, 0.75, 1.25, clamped to [0, 1].
  const auto up = upsample_attention(grid(2, 2, {0.0f, 1.0f, 0.5f, 0.25f}), 4, 4, false);
  const float expected[16] = {
      0.0f,   0.25f,    0.75f,    1.0f,    //
      0.125f, 0.296875f, 0.640625f, 0.8125f, //
      0.375f, 0.390625f, 0.421875f, 0.4375f, //
      0.5f,   0.4375f,  0.3125f,  0.25f,
  };
  for (std::size_t i = 0; i < 16; ++i) CHECK(up.values[i] == doctest::Approx(expected[i]).epsilon(1e-6));
}

TEST_CASE("normalize_min_max") {
  FloatImage m{3, 1, {0.2f, 0.4f, 0.6f}};
  const auto n = normalize_min_max(m);
  CHECK(n.values[0] == 0.0f);
  CHECK(n.values[1] == doctest::Approx(0.5f));
  CHECK(n.values[2] == 1.0f);
  FloatImage flat{2, 1, {0.3f, 0.3f}};
  CHECK(normalize_min_max(flat).values == flat.values);
}

TEST_CASE("fixed threshold") {
  AlphaConfig cfg;
  CHECK(threshold_map(FloatImage{4, 4, std::vector<float>(16, 0.0f)}, cfg).empty());
  CHECK(threshold_map(FloatImage{4, 4, std::vector<float>(16, 1.0f)}, cfg).count() == 16);
  // Inclusive at the threshold.
  CHECK(threshold_map(FloatImage{1, 1, {0.4f}}, cfg).count() == 1);
}

TEST_CASE("lowering the threshold never shrinks the mask") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FloatImage m{20, 20, {}};
  for (int i = 0; i < 400; ++i) m.values.push_back(u(rng));
  AlphaConfig cfg;
  BinaryMask prev(20, 20);
  for (double t = 0.95; t > 0.0; t -= 0.05) {
    cfg.threshold = t;
    const auto cur = threshold_map(m, cfg);
    CHECK(prev.subset_of(cur));
    prev = cur;
  }
}

TEST_CASE("otsu separates a bimodal map exactly") {
  FloatImage m{10, 10, {}};
  BinaryMask truth(10, 10);
  for (std::size_t i = 0; i < 100; ++i) {
    const bool high = (i * 7) % 3 == 0;
    m.values.push_back(high ? 0.9f : 0.1f);
    if (high) truth.set(i % 10, i / 10);
  }
  AlphaConfig cfg;
  cfg.mode = ThresholdMode::Otsu;
  CHECK(threshold_map(m, cfg) == truth);
}

TEST_CASE("otsu equals the exhaustive variance-maximization oracle") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> bins;
    const int modes = 1 + int(rng() % 4);
    std::vector<std::size_t> centers;
    for (int k = 0; k < modes; ++k) centers.push_back(rng() % 256);
    const std::size_t n = 20 + rng() % 400;
    for (std::size_t i = 0; i < n; ++i) {
      const long c = long(centers[rng() % centers.size()]);
      const long spread = long(rng() % 40) - 20;
      bins.push_back(std::size_t(std::clamp(c + spread, 0L, 255L)));
    }
    std::vector<std::size_t> hist(256, 0);
    for (auto b : bins) ++hist[b];
    if (std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }) < 2) continue;
    INFO("trial " << trial);
    CHECK(otsu_bin(from_bins(bins, bins.size())) == oracle::exhaustive_otsu(hist));
  }
}

TEST_CASE("otsu on a single-bin histogram") {
  CHECK(otsu_bin(from_bins({128, 128, 128}, 3)) == 128);
  CHECK(otsu_bin(from_bins({0, 0}, 2)) == 1);
}

TEST_CASE("fuse_with_visible") {
  std::mt19937_64 rng(2);
  const auto vis = oracle::random_mask(rng, 8, 8, 0.4);
  CHECK(fuse_with_visible(BinaryMask(8, 8), vis) == vis);
  CHECK(fuse_with_visible(mask_intersect(vis, oracle::random_mask(rng, 8, 8, 0.5)), vis) == vis);
  const auto other = mask_subtract(oracle::random_mask(rng, 8, 8, 0.4), vis);
  CHECK(fuse_with_visible(other, vis).count() == other.count() + vis.count());
  CHECK_THROWS_AS(fuse_with_visible(BinaryMask(3, 3), vis), DimensionError);
}

TEST_CASE("build_trimap bands") {
  BinaryMask fused(40, 40);
  for (std::size_t y = 10; y < 30; ++y)
    for (std::size_t x = 10; x < 30; ++x) fused.set(x, y);
  AlphaConfig cfg;
  cfg.erode_fg = 3;
  cfg.dilate_bg_band = 5;
  const auto t = build_trimap(fused, cfg);
  CHECK(t.at(20, 20) == TrimapLabel::SureFG);
  CHECK(t.at(10, 20) == TrimapLabel::ProbFG);
  CHECK(t.at(13, 20) == TrimapLabel::SureFG);
  CHECK(t.at(12, 20) == TrimapLabel::ProbFG);
  CHECK(t.at(7, 20) == TrimapLabel::ProbBG);
  CHECK(t.at(4, 20) == TrimapLabel::SureBG);
  CHECK(t.at(0, 0) == TrimapLabel::SureBG);
}

TEST_CASE("refine_alpha") {
  std::mt19937_64 rng(31);
  const auto scene = oracle::two_color_scene(rng, 64, 64, 10.0);
  AlphaConfig cfg;

  const auto alpha = refine_alpha(scene.image, scene.truth, cfg);
  CHECK(iou(alpha, scene.truth) >= 0.95);
  CHECK(erode(scene.truth, {cfg.erode_fg}).subset_of(alpha));

  cfg.grabcut_iters = 0;
  CHECK(refine_alpha(scene.image, scene.truth, cfg) == scene.truth);

  std::vector<std::string> warnings;
  CHECK(refine_alpha(scene.image, BinaryMask(64, 64), AlphaConfig{}, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("compose_rgba") {
  std::mt19937_64 rng(6);
  const auto img = oracle::random_image(rng, 6, 5);
  const auto opaque = compose_rgba(img, BinaryMask(6, 5, true));
  const auto clear = compose_rgba(img, BinaryMask(6, 5, false));
  BinaryMask checker(6, 5);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 6; ++x)
      if ((x + y) % 2 == 0) checker.set(x, y);
  const auto mixed = compose_rgba(img, checker);
  for (std::size_t y = 0; y < 5; ++y) {
    for (std::size_t x = 0; x < 6; ++x) {
      CHECK(opaque.pixel(x, y)[3] == 255);
      CHECK(clear.pixel(x, y)[3] == 0);
      CHECK(mixed.pixel(x, y)[3] == ((x + y) % 2 == 0 ? 255 : 0));
      CHECK(opaque.color_at(x, y) == img.color_at(x, y));
    }
  }
  CHECK_THROWS_AS(compose_rgba(img, BinaryMask(2, 2)), DimensionError);
}

TEST_CASE("extract_alpha fusion property on attention that covers only synthesized pixels") {
  // Left half visible red, right half synthesized blue; attention hot on the right only.
  Image completed(32, 32, 3);
  BinaryMask visible(32, 32);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      const bool obj = x >= 8 && x < 24 && y >= 8 && y < 24;
      if (obj && x < 16) visible.set(x, y);
      completed.set_color(x, y, !obj ? Color{240, 240, 240} : x < 16 ? Color{200, 30, 30} : Color{30, 30, 200});
    }
  }
  auto bundle = AttentionBundle::zeros(4, 4);
  bundle.cross[1 * 4 + 2] = 1.0f;
  bundle.cross[2 * 4 + 2] = 1.0f;

  AlphaConfig cfg;
  cfg.fuse_visible = false;
  const auto off = extract_alpha(completed, bundle, visible, cfg);
  CHECK_FALSE(visible.subset_of(off.alpha));

  cfg.fuse_visible = true;
  const auto on = extract_alpha(completed, bundle, visible, cfg);
  CHECK(visible.subset_of(on.fused));
  CHECK(visible.subset_of(on.alpha));

  const auto again = extract_alpha(completed, bundle, visible, cfg);
  CHECK(again.alpha == on.alpha);
}

TEST_CASE("extract_alpha with a flat bundle still covers the visible mask") {
  BinaryMask visible(16, 16);
  for (std::size_t y = 4; y < 12; ++y)
    for (std::size_t x = 4; x < 12; ++x) visible.set(x, y);
  const auto img = Image::filled(16, 16, kWhite);
  const auto r = extract_alpha(img, AttentionBundle::zeros(2, 2), visible, AlphaConfig{});
  CHECK(r.coarse.empty());
  CHECK(visible.subset_of(r.fused));
}

TEST_CASE("extract_alpha falls back to cross attention without a self-refined map") {
  AlphaConfig cfg;
  cfg.use_self_refined = true;
  const auto r = extract_alpha(Image::filled(16, 16, kWhite), AttentionBundle::zeros(2, 2), BinaryMask(16, 16), cfg);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("AlphaConfig validation") {
  AlphaConfig cfg;
  cfg.threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.threshold = 0.5;
  cfg.grabcut_iters = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.grabcut_iters = 5;
  cfg.mode = ThresholdMode::Otsu;
  cfg.threshold = 7.0;  // ignored in otsu mode
  CHECK_NOTHROW(cfg.validate());
}
