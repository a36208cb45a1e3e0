#include "amodal/demo_scene.hpp"

#include <nlohmann/json.hpp>

#include "amodal/agents.hpp"
#include "amodal/codec.hpp"
#include "amodal/error.hpp"
#include "amodal/png_io.hpp"

namespace amodal {

namespace {

using json = nlohmann::json;

void fill_rect(Image& img, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, Color c) {
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) img.set_color(x, y, c);
}

void fill_disk(Image& img, long cx, long cy, long r, Color c) {
  for (long y = cy - r; y <= cy + r; ++y) {
    for (long x = cx - r; x <= cx + r; ++x) {
      if (x < 0 || y < 0 || x >= long(img.width()) || y >= long(img.height())) continue;
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set_color(std::size_t(x), std::size_t(y), c);
    }
  }
}

json expansion_json(const ExpansionSpec& e) {
  return {{"left", e.left}, {"right", e.right}, {"top", e.top}, {"bottom", e.bottom}};
}

DemoScene red_object(std::string name, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1,
                     EdgeSet edges) {
  DemoScene s;
  s.name = std::move(name);
  s.image = Image::filled(64, 64, kSky);
  fill_rect(s.image, x0, y0, x1, y1, kBrick);
  s.query = "red box";
  s.target = "red box";
  s.colors = {{"red box", kBrick}};
  s.expected_edges = edges;
  constexpr double kGrow = 0.3;
  for (Edge e : edges) {
    switch (e) {
      case Edge::Left: s.expansion.left = kGrow; break;
      case Edge::Right: s.expansion.right = kGrow; break;
      case Edge::Top: s.expansion.top = kGrow; break;
      case Edge::Bottom: s.expansion.bottom = kGrow; break;
    }
  }
  s.rationale = edges.empty() ? "The box sits well inside the frame." : "The box runs past the frame.";
  s.description = "A plain red box with flat sides and sharp corners.";
  return s;
}

}  // namespace

DemoScene clock_tower_scene() {
  DemoScene s;
  s.name = "clock_tower";
  s.image = Image::filled(96, 96, kSky);
  fill_rect(s.image, 0, 24, 36, 96, kBrick);
  // Spire.
  for (std::size_t y = 8; y < 24; ++y) {
    const std::size_t half = (y - 8) * 18 / 16;
    fill_rect(s.image, 0, y, std::min<std::size_t>(18 + half, 36), y + 1, kBrick);
  }
  fill_disk(s.image, 36, 72, 16, kFoliage);
  fill_disk(s.image, 10, 90, 9, kFoliage);
  s.query = "clock tower";
  s.target = "clock tower";
  s.occluders = {"trees"};
  s.colors = {{"clock tower", kBrick}, {"trees", kFoliage}};
  s.expansion = {0.5, 0.0, 0.0, 0.5};
  s.rationale = "The tower is cut off by the left edge and continues below the bottom edge.";
  s.description =
      "A tall red brick clock tower with a square shaft and a pointed spire. "
      "It rises straight up from the ground against a clear blue sky.";
  s.expected_edges = {Edge::Left, Edge::Bottom};
  return s;
}

std::vector<DemoScene> boundary_fixture_scenes() {
  return {
      red_object("edge_left", 0, 20, 20, 44, {Edge::Left}),
      red_object("edge_right", 44, 20, 64, 44, {Edge::Right}),
      red_object("edge_top", 20, 0, 44, 20, {Edge::Top}),
      red_object("edge_bottom", 20, 44, 44, 64, {Edge::Bottom}),
      red_object("edge_bottom_left", 0, 40, 24, 64, {Edge::Left, Edge::Bottom}),
      unoccluded_scene(),
  };
}

DemoScene unoccluded_scene() { return red_object("centered", 20, 20, 44, 44, {}); }

void script_replies(MockReasoning& reasoning, const DemoScene& scene, std::size_t edge_tolerance) {
  const TaskQuery q{scene.image, scene.query};

  auto segmentation = MockSegmentation::chroma(scene.colors, scene.chroma_distance);
  const BinaryMask visible = segmentation.segment(scene.image, scene.target).mask;
  const auto box = bbox(visible);
  if (!box) throw FixtureError("scene '" + scene.name + "' has no visible target pixels");
  const BoundaryPrior prior{edges_touched(*box, visible.width(), visible.height(), edge_tolerance), *box,
                            visible.width(), visible.height()};

  const json occlusion = {{"target", scene.target}, {"occluders", scene.occluders}};
  const json boundary = {{"truncated", !scene.expansion.is_zero()},
                         {"expansion", expansion_json(scene.expansion)},
                         {"rationale", scene.rationale}};
  const json description = {{"description", scene.description}};
  json combined = occlusion;
  combined["truncated"] = boundary["truncated"];
  combined["expansion"] = boundary["expansion"];
  combined["description"] = scene.description;

  reasoning.add(build_occlusion_prompt(q), occlusion.dump());
  const std::string fenced = "Here is my analysis.\n```json\n" + boundary.dump(2) + "\n```";
  reasoning.add(build_boundary_prompt(q, prior), fenced);
  reasoning.add(build_boundary_prompt(q, std::nullopt), fenced);
  reasoning.add(build_description_prompt(q), description.dump());
  reasoning.add(build_single_agent_prompt(q), combined.dump());
}

AppConfig demo_config(const DemoScene& scene) {
  AppConfig cfg;
  cfg.mode = BackendMode::Mock;
  cfg.mock.segment_colors = scene.colors;
  cfg.mock.segment_max_distance = scene.chroma_distance;
  return cfg;
}

void write_demo(const DemoScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_png(scene.image, dir / (scene.name + ".png"));

  MockReasoning reasoning;
  script_replies(reasoning, scene);
  reasoning.save(dir / (scene.name + ".fixtures.json"));

  json colors = json::object();
  for (const auto& [label, c] : scene.colors) colors[label] = {c.r, c.g, c.b};
  const json config = {
      {"backend", "mock"},
      {"mock",
       {{"reasoning_fixtures", scene.name + ".fixtures.json"},
        {"segment_colors", colors},
        {"segment_max_distance", scene.chroma_distance}}},
  };
  write_file(dir / (scene.name + ".config.json"), config.dump(2) + "\n");
}

}  // namespace amodal
