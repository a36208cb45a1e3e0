#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "amodal/config.hpp"
#include "amodal/mock_backends.hpp"

namespace amodal {

/// A synthetic scene with flat-colored objects plus the replies a scripted
/// reasoning model gives for it.
struct DemoScene {
  std::string name;
  Image image;
  std::string query;
  std::string target;
  std::vector<std::string> occluders;
  std::map<std::string, Color> colors;
  double chroma_distance = 60.0;

  /// Boundary reply (hybrid and agent-only alike).
  ExpansionSpec expansion;
  std::string rationale;
  std::string description;

  /// Edges the visible part of the target touches.
  EdgeSet expected_edges;
};

inline constexpr Color kSky{135, 206, 235};
inline constexpr Color kBrick{170, 40, 30};
inline constexpr Color kFoliage{30, 120, 40};

/// 96x96 red-brick clock tower cut off by the left and bottom frame edges,
/// partly hidden by two trees, against a clear sky.
DemoScene clock_tower_scene();

/// One red object against sky per case: touching each single edge, the
/// bottom-left corner, and fully inside the frame.
std::vector<DemoScene> boundary_fixture_scenes();

/// The scene with its target and occluders removed (no occluder, no expansion).
DemoScene unoccluded_scene();

/// Registers a reply for every prompt the pipeline can send on `scene`:
/// occlusion, boundary (with and without the bbox prior), description and
/// the combined single-agent prompt.
void script_replies(MockReasoning& reasoning, const DemoScene& scene, std::size_t edge_tolerance = 2);

/// Mock-mode configuration wired to the scene's chroma keys.
AppConfig demo_config(const DemoScene& scene);

/// Writes <dir>/<name>.png, <dir>/<name>.fixtures.json and <dir>/<name>.config.json.
void write_demo(const DemoScene& scene, const std::filesystem::path& dir);

}  // namespace amodal
