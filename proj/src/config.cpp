#include "amodal/config.hpp"

#include <cstdlib>
#include <set>

#include "amodal/codec.hpp"
#include "amodal/error.hpp"
#include "amodal/mock_backends.hpp"
#include "amodal/png_io.hpp"

namespace amodal {

namespace {

using json = nlohmann::json;

// Typed reads from one config section; every key read is recorded so the
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config: \"" + name_ + "\" must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }
  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_[key].get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: " + where(key) + " has the wrong type");
    }
  }
  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    if (!has(key)) return;
    T v{};
    read(key, v);
    out = v;
  }
  void read_size(const char* key, std::size_t& out) {
    if (!has(key)) return;
    if (!j_[key].is_number_integer() || j_[key].get<long long>() < 0) {
      throw ValidationError("config: " + where(key) + " must be a non-negative integer");
    }
    out = j_[key].get<std::size_t>();
  }
  std::string where(const std::string& key) const { return name_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError("config: unknown key " + where(key));
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path q(p);
  return q.is_absolute() ? q : base / q;
}

void parse_alpha(const json& j, AlphaConfig& a) {
  Section s(j, "alpha");
  if (s.has("threshold")) {
    const json& t = s.raw("threshold");
    if (t.is_string()) {
      apply_threshold(a, t.get<std::string>());
    } else if (t.is_number()) {
      a.mode = ThresholdMode::Fixed;
      a.threshold = t.get<double>();
    } else {
      throw ValidationError("config: alpha.threshold must be a number or \"otsu\"");
    }
  }
  s.read("fuse_visible", a.fuse_visible);
  s.read("use_self_refined", a.use_self_refined);
  s.read("grabcut_iters", a.grabcut_iters);
  s.read_size("erode_fg", a.erode_fg);
  s.read_size("dilate_bg_band", a.dilate_bg_band);
  s.read("attn_last_n", a.attn_last_n);
  s.read_size("gmm_components", a.gmm_components);
  s.read("gamma", a.gamma);
  s.read("seed", a.seed);
  s.finish();
}

void parse_pipeline(const json& j, PipelineConfig& p) {
  Section s(j, "pipeline");
  if (s.has("dilation_radius")) {
    std::size_t r = 0;
    s.read_size("dilation_radius", r);
    p.dilation_radius = r;
  }
  s.read("protect_visible", p.protect_visible);
  s.read_size("edge_tolerance", p.edge_tolerance);
  if (s.has("background")) p.background = parse_color(s.raw("background"));
  s.read("max_retries", p.max_retries);
  s.read("single_agent", p.single_agent);
  if (s.has("boundary_strategy")) {
    std::string name;
    s.read("boundary_strategy", name);
    p.boundary_strategy = boundary_strategy_from_string(name);
  }
  s.read("bbox_only_fraction", p.bbox_only_fraction);
  s.read("concurrent_agents", p.concurrent_agents);
  s.read_size("description_token_budget", p.description_token_budget);
  s.read("temperature", p.temperature);
  s.read("chat_seed", p.chat_seed);
  s.read("steps", p.steps);
  s.read("seed", p.seed);
  s.finish();
}

void parse_http_client(const json& j, const std::string& name, HttpClientConfig& c, std::string* model) {
  Section s(j, name);
  s.read("base_url", c.base_url);
  s.read("token_env", c.token_env);
  s.read("timeout_s", c.timeout_s);
  s.read("max_attempts", c.max_attempts);
  s.read("backoff_initial_s", c.backoff_initial_s);
  s.read("backoff_max_s", c.backoff_max_s);
  s.read_size("max_in_flight", c.max_in_flight);
  if (model) s.read("model", *model);
  if (s.has("token")) throw ValidationError("config: " + name + ".token is not allowed; set token_env instead");
  s.finish();
}

void parse_mock(const json& j, const std::filesystem::path& base, MockSettings& m) {
  Section s(j, "mock");
  if (s.has("reasoning_fixtures")) {
    std::string p;
    s.read("reasoning_fixtures", p);
    m.reasoning_fixtures = resolve(base, p);
  }
  s.read("reasoning_fallback", m.reasoning_fallback);
  if (s.has("segment_colors")) {
    const json& colors = s.raw("segment_colors");
    if (!colors.is_object()) throw ValidationError("config: mock.segment_colors must be an object");
    for (const auto& [label, c] : colors.items()) m.segment_colors[label] = parse_color(c);
  }
  s.read("segment_max_distance", m.segment_max_distance);
  if (s.has("segment_masks")) {
    const json& masks = s.raw("segment_masks");
    if (!masks.is_object()) throw ValidationError("config: mock.segment_masks must be an object");
    for (const auto& [label, p] : masks.items()) {
      if (!p.is_string()) throw ValidationError("config: mock.segment_masks." + label + " must be a path");
      m.segment_masks[label] = resolve(base, p.get<std::string>());
    }
  }
  s.read("metrics", m.metrics);
  s.finish();
}

}  // namespace

std::string to_string(BackendMode m) { return m == BackendMode::Mock ? "mock" : "http"; }

BackendMode backend_mode_from_string(const std::string& name) {
  if (name == "mock") return BackendMode::Mock;
  if (name == "http") return BackendMode::Http;
  throw ValidationError("unknown backend '" + name + "' (expected mock or http)");
}

void apply_threshold(AlphaConfig& a, const std::string& spec) {
  if (spec == "otsu") {
    a.mode = ThresholdMode::Otsu;
    return;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(spec, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != spec.size()) throw ValidationError("threshold must be a number or 'otsu', got '" + spec + "'");
  a.mode = ThresholdMode::Fixed;
  a.threshold = v;
}

Color parse_color(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("color must be [r, g, b]");
  std::uint8_t c[3];
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer() || j[i].get<int>() < 0 || j[i].get<int>() > 255) {
      throw ValidationError("color components must be integers in 0..255");
    }
    c[i] = static_cast<std::uint8_t>(j[i].get<int>());
  }
  return {c[0], c[1], c[2]};
}

AppConfig parse_app_config(const json& j, const std::filesystem::path& base_dir) {
  AppConfig cfg;
  Section s(j, "config");
  if (s.has("backend")) {
    std::string mode;
    s.read("backend", mode);
    cfg.mode = backend_mode_from_string(mode);
  }
  if (s.has("pipeline")) parse_pipeline(s.raw("pipeline"), cfg.pipeline);
  if (s.has("alpha")) parse_alpha(s.raw("alpha"), cfg.pipeline.alpha);
  if (s.has("mock")) parse_mock(s.raw("mock"), base_dir, cfg.mock);
  if (s.has("http")) {
    Section h(s.raw("http"), "http");
    if (h.has("reasoning")) parse_http_client(h.raw("reasoning"), "http.reasoning", cfg.http.reasoning, &cfg.http.reasoning_model);
    if (h.has("service")) parse_http_client(h.raw("service"), "http.service", cfg.http.service, nullptr);
    h.read("metrics", cfg.http.metrics);
    h.finish();
  }
  if (s.has("eval")) {
    Section e(s.raw("eval"), "eval");
    e.read_size("parallelism", cfg.eval.parallelism);
    e.finish();
  }
  s.finish();
  cfg.pipeline.validate();
  return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ValidationError("config " + path.string() + " is not valid JSON");
  return parse_app_config(j, path.parent_path());
}

Backends make_backends(const AppConfig& cfg) {
  Backends b;
  if (cfg.mode == BackendMode::Mock) {
    auto reasoning = std::make_shared<MockReasoning>();
    if (cfg.mock.reasoning_fixtures) reasoning->load(*cfg.mock.reasoning_fixtures);
    if (cfg.mock.reasoning_fallback) {
      reasoning->set_strict(false);
      reasoning->set_fallback(cfg.mock.reasoning_fallback);
    }
    b.reasoning = reasoning;
    if (!cfg.mock.segment_masks.empty()) {
      std::map<std::string, BinaryMask> masks;
      for (const auto& [label, path] : cfg.mock.segment_masks) masks[label] = load_mask_png(path);
      b.segmentation = std::make_shared<MockSegmentation>(MockSegmentation::fixtures(std::move(masks)));
    } else {
      b.segmentation = std::make_shared<MockSegmentation>(
          MockSegmentation::chroma(cfg.mock.segment_colors, cfg.mock.segment_max_distance));
    }
    b.inpainting = std::make_shared<MockInpainting>();
    if (cfg.mock.metrics) b.metrics = std::make_shared<MockMetrics>();
    return b;
  }
  if (cfg.http.reasoning.base_url.empty()) throw ValidationError("config: http.reasoning.base_url is required");
  if (cfg.http.service.base_url.empty()) throw ValidationError("config: http.service.base_url is required");
  b.reasoning = std::make_shared<HttpReasoningClient>(cfg.http.reasoning, cfg.http.reasoning_model);
  b.segmentation = std::make_shared<HttpSegmentationClient>(cfg.http.service);
  b.inpainting = std::make_shared<HttpInpaintingClient>(cfg.http.service);
  if (cfg.http.metrics) b.metrics = std::make_shared<HttpMetricClient>(cfg.http.service);
  return b;
}

}  // namespace amodal
