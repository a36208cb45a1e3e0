#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "amodal/http_backends.hpp"
#include "amodal/metrics.hpp"
#include "amodal/pipeline.hpp"

namespace amodal {

enum class BackendMode { Mock, Http };

std::string to_string(BackendMode m);
BackendMode backend_mode_from_string(const std::string& name);

struct MockSettings {
  std::optional<std::filesystem::path> reasoning_fixtures;
  /// Replies for prompts with no fixture; strict mode fails instead.
  std::optional<std::string> reasoning_fallback;
  std::map<std::string, Color> segment_colors;
  double segment_max_distance = 60.0;
  /// Per-label mask files; when non-empty, replaces chroma mode.
  std::map<std::string, std::filesystem::path> segment_masks;
  bool metrics = true;
};

struct HttpSettings {
  HttpClientConfig reasoning;
  std::string reasoning_model = "gpt-4o";
  HttpClientConfig service;
  bool metrics = true;
};

/// Everything a CLI run needs. Secrets never live here: HTTP auth names an
/// environment variable instead.
struct AppConfig {
  PipelineConfig pipeline;
  BackendMode mode = BackendMode::Mock;
  MockSettings mock;
  HttpSettings http;
  BenchmarkOptions eval;
};

/// Unknown keys are rejected. Relative paths resolve against `base_dir`.
AppConfig parse_app_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);

/// Parses a threshold spec: a number in [0,1] or "otsu".
void apply_threshold(AlphaConfig& a, const std::string& spec);
Color parse_color(const nlohmann::json& j);

Backends make_backends(const AppConfig& cfg);

}  // namespace amodal
