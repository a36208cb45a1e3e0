#include "amodal/dump.hpp"

#include <cmath>

#include "amodal/codec.hpp"
#include "amodal/png_io.hpp"

namespace amodal {

using json = nlohmann::json;

json to_json(const ExpansionSpec& e) {
  return {{"left", e.left}, {"right", e.right}, {"top", e.top}, {"bottom", e.bottom}};
}

json to_json(const CanvasPlacement& p) {
  return {{"orig_width", p.orig_width}, {"orig_height", p.orig_height}, {"width", p.new_width},
          {"height", p.new_height},     {"offset_x", p.offset_x},       {"offset_y", p.offset_y}};
}

json to_json(const EdgeSet& edges) {
  json a = json::array();
  for (Edge e : edges) a.push_back(to_string(e));
  return a;
}

json to_json(const PipelineTrace& trace, bool with_timings) {
  json j;
  j["transcripts"] = json::array();
  for (const auto& t : trace.transcripts) {
    j["transcripts"].push_back(
        {{"agent", t.agent}, {"attempts", t.attempts}, {"requests", t.requests}, {"responses", t.responses}});
  }
  j["warnings"] = trace.warnings;
  j["inpaint_calls"] = trace.inpaint_calls;
  j["inpainting_skipped"] = trace.inpainting_skipped;
  if (with_timings) {
    j["timings"] = json::array();
    for (const auto& t : trace.timings) j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  }
  return j;
}

json to_json(const SpatialAnalysis& sa, BoundaryStrategy strategy) {
  json j;
  j["target"] = sa.occlusion.target;
  j["occluders"] = sa.occlusion.occluders;
  j["visible_bbox"] = {sa.visible_bbox.x, sa.visible_bbox.y, sa.visible_bbox.width, sa.visible_bbox.height};
  j["touched_edges"] = to_json(sa.touched_edges);
  j["boundary_strategy"] = to_string(strategy);
  j["truncated"] = sa.boundary.truncated;
  j["directions"] = to_json(sa.estimate.directions);
  j["proportions"] = sa.estimate.proportions ? to_json(*sa.estimate.proportions) : json(nullptr);
  j["expansion"] = to_json(sa.estimate.applied);
  j["canvas"] = to_json(sa.placement);
  j["dilation_radius"] = sa.dilation_radius;
  j["inpaint_pixels"] = sa.inpaint_mask.count();
  return j;
}

Image attention_heatmap(const AttentionBundle& b, std::size_t width, std::size_t height, bool use_self_refined) {
  const FloatImage m = upsample_attention(b, width, height, use_self_refined && b.self_refined.has_value());
  Image out(width, height, 1);
  auto s = out.samples();
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    s[i] = static_cast<std::uint8_t>(std::lround(std::clamp(m.values[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

void write_intermediates(const PipelineResult& r, const PipelineConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SpatialAnalysis& sa = r.spatial;
  save_mask_png(sa.visible_mask, dir / "visible_mask.png");
  for (std::size_t i = 0; i < sa.occluder_masks.size(); ++i) {
    save_mask_png(sa.occluder_masks[i], dir / ("occluder_" + std::to_string(i) + ".png"));
  }
  save_mask_png(sa.visible_canvas, dir / "visible_canvas.png");
  save_mask_png(sa.inpaint_mask, dir / "inpaint_mask.png");
  save_png(r.visible_only, dir / "visible_only.png");
  save_png(r.masked_input, dir / "masked_input.png");
  write_file(dir / "prompt.txt", r.prompt.prompt_text + "\n");
  save_png(attention_heatmap(r.attention, r.completed.width(), r.completed.height(), cfg.alpha.use_self_refined),
           dir / "attention.png");
  save_attention(r.attention, dir / "attention.attn");
  save_png(r.completed, dir / "completed.png");
  save_mask_png(r.coarse_mask, dir / "coarse_mask.png");
  save_mask_png(r.fused_mask, dir / "fused_mask.png");
  save_mask_png(r.alpha, dir / "alpha.png");

  json trace = to_json(r.trace, false);
  trace["spatial"] = to_json(sa, cfg.boundary_strategy);
  write_file(dir / "trace.json", trace.dump(2) + "\n");
}

}  // namespace amodal
