#include <doctest.h>

#include <random>

#include "amodal/error.hpp"
#include "amodal/grabcut.hpp"
#include "oracles.hpp"

using namespace amodal;

TEST_CASE("min_cut agrees with exhaustive enumeration on tiny grids") {
  std::mt19937_64 rng(17);
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 1}, {2, 2}, {3, 3}, {4, 3}, {3, 4}, {2, 6}, {6, 2}, {1, 12}, {12, 1}};
  int draws = 0;
  for (int round = 0; round < 4; ++round) {
    for (auto [w, h] : shapes) {
      const auto g = oracle::random_graph(rng, w, h);
      const auto cut = min_cut(g);
      const double best = oracle::exhaustive_min_cut(g);
      INFO(w << "x" << h << " round " << round);
      CHECK(cut.cut_value == doctest::Approx(best).epsilon(1e-9));
      CHECK(cut.flow_value == doctest::Approx(best).epsilon(1e-9));
      CHECK(oracle::labeling_cost(g, cut.source_side) == doctest::Approx(best).epsilon(1e-9));
      ++draws;
    }
  }
  CHECK(draws >= 20);
}

TEST_CASE("cut_cost matches the edge-by-edge definition") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 20; ++i) {
    const auto g = oracle::random_graph(rng, 5, 4);
    const auto labels = oracle::random_mask(rng, 5, 4, 0.5);
    CHECK(cut_cost(g, labels) == doctest::Approx(oracle::labeling_cost(g, labels)).epsilon(1e-12));
  }
}

TEST_CASE("min_cut rejects negative capacities") {
  GridGraph g(2, 1);
  g.source_cap[0] = -1.0;
  CHECK_THROWS_AS(min_cut(g), ValidationError);
}

TEST_CASE("beta_estimate") {
  CHECK(beta_estimate(Image::filled(4, 4, {9, 9, 9})) == kBetaSentinel);
  // One horizontal pair with squared difference 100.
  Image two(2, 1, 3, {0, 0, 0, 10, 0, 0});
  CHECK(beta_estimate(two) == doctest::Approx(1.0 / 200.0));
  // 2x2: six 8-connected pairs. Left column black, right column (10,0,0):
  // horizontal 2 x 100, vertical 2 x 0, diagonals 2 x 100 -> mean 400/6.
  Image four(2, 2, 3, {0, 0, 0, 10, 0, 0, 0, 0, 0, 10, 0, 0});
  CHECK(beta_estimate(four) == doctest::Approx(1.0 / (2.0 * 400.0 / 6.0)));
}

TEST_CASE("Gmm::estimate is the regularized sample estimate") {
  const std::vector<Eigen::Vector3d> s{{0, 0, 0}, {2, 0, 0}, {10, 10, 10}, {10, 12, 10}};
  const std::vector<std::size_t> a{0, 0, 1, 1};
  const Gmm g = Gmm::estimate(s, a, 2);
  REQUIRE(g.size() == 2);
  const auto& c0 = g.components()[0];
  CHECK(c0.weight == doctest::Approx(0.5));
  CHECK(c0.mean.x() == doctest::Approx(1.0));
  // Population variance along x is 1; other axes only carry the regularizer.
  CHECK(c0.covariance(0, 0) == doctest::Approx(1.0 + Gmm::kCovarianceEpsilon));
  CHECK(c0.covariance(1, 1) == doctest::Approx(Gmm::kCovarianceEpsilon));
  CHECK(g.components()[1].mean.y() == doctest::Approx(11.0));

  // A component with no samples is dropped.
  const Gmm h = Gmm::estimate(s, std::vector<std::size_t>{0, 0, 0, 0}, 3);
  CHECK(h.size() == 1);
}

TEST_CASE("fit_gmm separates well-spread clusters and is seed-deterministic") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<Eigen::Vector3d> s;
  const Eigen::Vector3d centers[3] = {{20, 20, 20}, {200, 30, 30}, {40, 220, 120}};
  for (int i = 0; i < 300; ++i) s.push_back(centers[i % 3] + Eigen::Vector3d(n(rng), n(rng), n(rng)));
  const Gmm g = fit_gmm(s, 3, 11);
  REQUIRE(g.size() == 3);
  for (const auto& c : centers) {
    double best = 1e9;
    for (const auto& comp : g.components()) best = std::min(best, (comp.mean - c).norm());
    CHECK(best < 1.0);
  }
  const Gmm again = fit_gmm(s, 3, 11);
  for (std::size_t k = 0; k < 3; ++k) CHECK(again.components()[k].mean == g.components()[k].mean);

  std::vector<std::string> warnings;
  const Gmm few = fit_gmm(std::vector<Eigen::Vector3d>{{1, 2, 3}, {4, 5, 6}}, 5, 0, &warnings);
  CHECK(few.size() <= 2);
  CHECK_FALSE(warnings.empty());
}

TEST_CASE("trimap helpers") {
  const auto t = Trimap::from_box(6, 5, Rect{1, 1, 3, 2});
  CHECK(t.at(0, 0) == TrimapLabel::SureBG);
  CHECK(t.at(2, 2) == TrimapLabel::ProbFG);
  CHECK(t.foreground().count() == 6);
  CHECK_THROWS_AS(Trimap(3, 3, TrimapLabel::SureBG).validate(), ValidationError);
  CHECK_THROWS_AS(Trimap(3, 3, TrimapLabel::ProbFG).validate(), ValidationError);
}

TEST_CASE("grabcut recovers noisy two-color scenes from a padded box") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 4; ++i) {
    const auto scene = oracle::two_color_scene(rng, 64, 64, 10.0);
    const auto box = oracle::pad_box(scene.object_box, 10, 64, 64);
    const auto r = grabcut_run(scene.image, Trimap::from_box(64, 64, box), {});
    INFO("scene " << i);
    CHECK(iou(r.mask, scene.truth) >= 0.95);
    for (std::size_t k = 1; k < r.energies.size(); ++k) {
      CHECK(r.energies[k] <= r.energies[k - 1] + 1e-6 * std::max(1.0, std::abs(r.energies[k - 1])));
    }
  }
}

TEST_CASE("grabcut keeps sure pixels and honors zero iterations") {
  std::mt19937_64 rng(100);
  const auto scene = oracle::two_color_scene(rng, 48, 48, 10.0);
  Trimap t = Trimap::from_box(48, 48, oracle::pad_box(scene.object_box, 6, 48, 48));
  // Pin a background-colored pixel as foreground: the cut must keep it.
  t.set(1, 1, TrimapLabel::SureFG);
  const auto r = grabcut_run(scene.image, t, {3, 5, 50.0, 0});
  CHECK(r.mask.at(1, 1));
  for (std::size_t y = 0; y < 48; ++y)
    for (std::size_t x = 0; x < 48; ++x)
      if (t.at(x, y) == TrimapLabel::SureBG) CHECK_FALSE(r.mask.at(x, y));

  const auto none = grabcut_run(scene.image, t, {0, 5, 50.0, 0});
  CHECK(none.mask == t.foreground());
  CHECK(none.energies.empty());

  const auto again = grabcut_run(scene.image, t, {3, 5, 50.0, 0});
  CHECK(again.mask == r.mask);
  CHECK(again.energies == r.energies);
}
