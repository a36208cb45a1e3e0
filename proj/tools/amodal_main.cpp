// amodal: command-line front end.
//
//   amodal complete IMAGE QUERY -o OUT.png [--dump-intermediates] [overrides]
//   amodal inspect-mask IMAGE QUERY [-o DIR] [--boundary-strategy S] [overrides]
//   amodal eval MANIFEST OUT_DIR [--allow-failures] [overrides]
//   amodal make-demo DIR
//
// Exit codes: 0 success, 1 pipeline failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "amodal/config.hpp"
#include "amodal/demo_scene.hpp"
#include "amodal/dump.hpp"
#include "amodal/error.hpp"
#include "amodal/metrics.hpp"
#include "amodal/png_io.hpp"

namespace {

using namespace amodal;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Raised for anything the user can fix by changing arguments or config.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config;
  std::optional<std::string> backend;
  std::optional<std::string> threshold;
  std::optional<std::size_t> dilation_radius;
  std::optional<bool> protect_visible;
  std::optional<bool> fuse_visible;
  std::optional<bool> single_agent;
  std::optional<int> attn_last_n;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> boundary_strategy;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--backend", o.backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--threshold", o.threshold, "attention threshold in [0,1], or 'otsu'");
  cmd->add_option("--dilation-radius", o.dilation_radius, "occluder dilation radius in pixels");
  cmd->add_flag("--protect-visible", o.protect_visible, "keep visible pixels out of the inpainting mask");
  cmd->add_flag("--fuse-visible", o.fuse_visible, "union the attention mask with the visible mask");
  cmd->add_flag("--single-agent", o.single_agent, "ask one combined prompt instead of three agents");
  cmd->add_option("--attn-last-n", o.attn_last_n, "denoising steps averaged into the attention map");
  cmd->add_option("--seed", o.seed, "inpainting and GrabCut seed");
  cmd->add_option("--boundary-strategy", o.boundary_strategy, "hybrid, agent-only or bbox-only")
      ->check(CLI::IsMember({"hybrid", "agent-only", "bbox-only"}));
}

AppConfig resolve_config(const Overrides& o) {
  try {
    AppConfig cfg = o.config.empty() ? AppConfig{} : load_app_config(o.config);
    PipelineConfig& p = cfg.pipeline;
    if (o.backend) cfg.mode = backend_mode_from_string(*o.backend);
    if (o.threshold) apply_threshold(p.alpha, *o.threshold);
    if (o.dilation_radius) p.dilation_radius = *o.dilation_radius;
    if (o.protect_visible) p.protect_visible = *o.protect_visible;
    if (o.fuse_visible) p.alpha.fuse_visible = *o.fuse_visible;
    if (o.single_agent) p.single_agent = *o.single_agent;
    if (o.attn_last_n) p.alpha.attn_last_n = *o.attn_last_n;
    if (o.seed) {
      p.seed = *o.seed;
      p.alpha.seed = *o.seed;
    }
    if (o.boundary_strategy) p.boundary_strategy = boundary_strategy_from_string(*o.boundary_strategy);
    p.validate();
    return cfg;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

Backends backends_for(const AppConfig& cfg) {
  try {
    return make_backends(cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

TaskQuery read_query(const std::string& image_path, const std::string& text) {
  try {
    return {load_png(image_path), text};
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::filesystem::path intermediates_dir(const std::filesystem::path& out) {
  return out.parent_path() / (out.stem().string() + "_intermediates");
}

int cmd_complete(const std::string& image, const std::string& query, const std::string& out, bool dump,
                 const Overrides& o) {
  const AppConfig cfg = resolve_config(o);
  const TaskQuery q = read_query(image, query);
  const Backends backends = backends_for(cfg);
  const PipelineResult r = run_pipeline(q, cfg.pipeline, backends);
  const std::filesystem::path out_path(out);
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  save_png(r.rgba, out_path);
  if (dump) write_intermediates(r, cfg.pipeline, intermediates_dir(out_path));
  for (const auto& w : r.trace.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << out_path.string() << "\n";
  return kOk;
}

int cmd_inspect(const std::string& image, const std::string& query, const std::string& out_dir,
                const Overrides& o) {
  const AppConfig cfg = resolve_config(o);
  const TaskQuery q = read_query(image, query);
  const Backends backends = backends_for(cfg);
  PipelineTrace trace;
  const SpatialAnalysis sa = analyze_spatial(q, cfg.pipeline, backends, trace, false);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = std::filesystem::path(image).stem().string();
  const auto visible_path = dir / (stem + ".visible.png");
  const auto inpaint_path = dir / (stem + ".inpaint.png");
  save_mask_png(sa.visible_mask, visible_path);
  save_mask_png(sa.inpaint_mask, inpaint_path);

  nlohmann::json j = to_json(sa, cfg.pipeline.boundary_strategy);
  j["visible_mask_png"] = visible_path.string();
  j["inpaint_mask_png"] = inpaint_path.string();
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_eval(const std::string& manifest, const std::string& out_dir, bool allow_failures,
             std::optional<std::size_t> parallelism, const Overrides& o) {
  AppConfig cfg = resolve_config(o);
  if (parallelism) cfg.eval.parallelism = *parallelism;
  std::vector<EvalCase> cases;
  try {
    cases = load_manifest(manifest);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (cases.empty()) throw UsageError("manifest " + manifest + " has no cases");
  const Backends backends = backends_for(cfg);
  const EvalReport report = run_benchmark(cases, cfg.pipeline, backends, cfg.eval);
  write_report(report, out_dir);
  for (const auto& f : report.failures) std::cerr << "case " << f.name << " failed: " << f.error << "\n";
  std::cout << report.rows.size() << " case(s) evaluated, " << report.failures.size() << " failed\n";
  return report.failures.empty() || allow_failures ? kOk : kFailure;
}

int cmd_make_demo(const std::string& dir) {
  write_demo(clock_tower_scene(), dir);
  for (const auto& s : boundary_fixture_scenes()) write_demo(s, std::filesystem::path(dir) / "boundary");
  std::cout << dir << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amodal completion: complete hidden parts of an object and cut it out as RGBA."};
  app.require_subcommand(1);

  Overrides complete_o, inspect_o, eval_o;
  std::string image, query, out, manifest, out_dir = ".", demo_dir;
  bool dump = false, allow_failures = false;
  std::optional<std::size_t> parallelism;

  auto* complete = app.add_subcommand("complete", "Run the full pipeline and write an RGBA PNG");
  complete->add_option("image", image, "input PNG")->required();
  complete->add_option("query", query, "object to complete")->required();
  complete->add_option("-o,--out", out, "output RGBA PNG")->required();
  complete->add_flag("--dump-intermediates", dump, "write masks, prompt, attention and trace next to the output");
  add_overrides(complete, complete_o);

  auto* inspect = app.add_subcommand("inspect-mask", "Run only spatial reasoning and print the masks' derivation");
  inspect->add_option("image", image, "input PNG")->required();
  inspect->add_option("query", query, "object to complete")->required();
  inspect->add_option("-o,--out-dir", out_dir, "directory for the mask PNGs");
  add_overrides(inspect, inspect_o);

  auto* eval = app.add_subcommand("eval", "Run a JSONL manifest and write report.json and report.csv");
  eval->add_option("manifest", manifest, "JSON Lines manifest")->required();
  eval->add_option("out_dir", out_dir, "report directory")->required();
  eval->add_flag("--allow-failures", allow_failures, "exit 0 even when cases fail");
  eval->add_option("--parallelism", parallelism, "cases evaluated concurrently")->check(CLI::PositiveNumber);
  add_overrides(eval, eval_o);

  auto* demo = app.add_subcommand("make-demo", "Write the synthetic demo scenes with mock fixtures and configs");
  demo->add_option("dir", demo_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*complete) return cmd_complete(image, query, out, dump, complete_o);
    if (*inspect) return cmd_inspect(image, query, out_dir, inspect_o);
    if (*eval) return cmd_eval(manifest, out_dir, allow_failures, parallelism, eval_o);
    if (*demo) return cmd_make_demo(demo_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
