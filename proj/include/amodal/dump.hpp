#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>

#include "amodal/pipeline.hpp"

namespace amodal {

nlohmann::json to_json(const ExpansionSpec& e);
nlohmann::json to_json(const CanvasPlacement& p);
nlohmann::json to_json(const EdgeSet& edges);
/// Wall-clock timings are only included on request so dumps stay reproducible.
nlohmann::json to_json(const PipelineTrace& trace, bool with_timings);
/// Occlusion finding, touched edges, boundary estimate, canvas and dilation radius.
/// An absent proportion estimate serializes as null.
nlohmann::json to_json(const SpatialAnalysis& sa, BoundaryStrategy strategy);

/// Gray heatmap of the selected attention map at canvas resolution.
Image attention_heatmap(const AttentionBundle& b, std::size_t width, std::size_t height, bool use_self_refined);

/// Fixed file names, so reruns overwrite the same set:
///   visible_mask.png occluder_<i>.png visible_canvas.png inpaint_mask.png
///   visible_only.png masked_input.png prompt.txt attention.png attention.attn
///   completed.png coarse_mask.png fused_mask.png alpha.png trace.json
void write_intermediates(const PipelineResult& r, const PipelineConfig& cfg, const std::filesystem::path& dir);

}  // namespace amodal
