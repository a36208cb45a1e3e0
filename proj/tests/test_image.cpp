#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "amodal/error.hpp"
#include "amodal/image.hpp"
#include "amodal/png_io.hpp"
#include "oracles.hpp"

using namespace amodal;

TEST_CASE("extract_visible") {
  std::mt19937_64 rng(1);
  const auto img = oracle::random_image(rng, 9, 6);
  CHECK(extract_visible(img, BinaryMask(9, 6, true)) == img);
  CHECK(extract_visible(img, BinaryMask(9, 6), kWhite) == Image::filled(9, 6, kWhite));

  BinaryMask one(9, 6);
  one.set(4, 2);
  const Color bg{1, 2, 3};
  const auto out = extract_visible(img, one, bg);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 9; ++x) CHECK(out.color_at(x, y) == (x == 4 && y == 2 ? img.color_at(4, 2) : bg));
  CHECK_THROWS_AS(extract_visible(img, BinaryMask(3, 3)), DimensionError);
}

TEST_CASE("extract_visible introduces no new colors") {
  std::mt19937_64 rng(2);
  const auto img = oracle::random_image(rng, 16, 16);
  const auto m = oracle::random_mask(rng, 16, 16, 0.5);
  const Color bg{10, 20, 30};
  const auto out = extract_visible(img, m, bg);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      const Color c = out.color_at(x, y);
      CHECK((c == bg || c == img.color_at(x, y)));
    }
  }
}

TEST_CASE("place_on_canvas round-trips through the footprint") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 60; ++i) {
    const std::size_t w = 1 + rng() % 40, h = 1 + rng() % 40;
    const auto img = oracle::random_image(rng, w, h);
    const auto p = compute_canvas(w, h, oracle::random_expansion(rng, 1.0));
    const Color bg{7, 8, 9};
    const auto canvas = place_on_canvas(img, p, bg);
    CHECK(canvas.width() == p.new_width);
    CHECK(crop(canvas, footprint(p)) == img);
    for (std::size_t y = 0; y < p.new_height; ++y)
      for (std::size_t x = 0; x < p.new_width; ++x)
        if (!p.in_footprint(x, y)) CHECK(canvas.color_at(x, y) == bg);
  }
}

TEST_CASE("place_on_canvas identity and dimension checks") {
  std::mt19937_64 rng(4);
  const auto img = oracle::random_image(rng, 10, 10);
  CHECK(place_on_canvas(img, compute_canvas(10, 10, {})) == img);
  CHECK_THROWS_AS(place_on_canvas(img, compute_canvas(11, 10, {})), DimensionError);
}

TEST_CASE("gray and RGBA conversion") {
  Image gray(2, 1, 1, {10, 200});
  const auto rgb = to_rgb(gray);
  CHECK(rgb.channels() == 3);
  CHECK(rgb.color_at(1, 0) == Color{200, 200, 200});
  Image rgba(1, 1, 4, {1, 2, 3, 0});
  CHECK(to_rgb(rgba) == Image(1, 1, 3, {1, 2, 3}));
  CHECK_THROWS_AS(Image(2, 2, 2), ValidationError);
}

TEST_CASE("crop bounds") {
  const auto img = Image::filled(5, 5, kWhite);
  CHECK_THROWS_AS(crop(img, Rect{3, 3, 3, 1}), DimensionError);
  CHECK(crop(img, Rect{1, 1, 4, 4}).width() == 4);
}

TEST_CASE("PNG round trips") {
  std::mt19937_64 rng(5);
  const auto img = oracle::random_image(rng, 13, 7);
  CHECK(decode_png(encode_png(img)) == img);

  Image rgba(3, 2, 4);
  for (auto& s : rgba.samples()) s = static_cast<std::uint8_t>(rng());
  CHECK(decode_png(encode_png(rgba), true) == rgba);
  CHECK(decode_png(encode_png(rgba), false).channels() == 3);

  const auto m = oracle::random_mask(rng, 11, 9, 0.5);
  CHECK(decode_mask_png(encode_mask_png(m)) == m);

  // Any nonzero gray level reads as set.
  Image g(3, 1, 1, {0, 1, 255});
  const auto back = decode_mask_png(encode_png(g));
  CHECK_FALSE(back.at(0, 0));
  CHECK(back.at(1, 0));
  CHECK(back.at(2, 0));

  CHECK_THROWS_AS(decode_png("not a png"), IoError);
}

TEST_CASE("PNG files") {
  const auto dir = std::filesystem::temp_directory_path() / "amodal_test_image";
  std::filesystem::create_directories(dir);
  const auto img = Image::filled(4, 4, {9, 8, 7});
  save_png(img, dir / "a.png");
  CHECK(load_png(dir / "a.png") == img);
  CHECK_THROWS_AS(load_png(dir / "missing.png"), IoError);
  std::filesystem::remove_all(dir);
}
