#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "amodal/agents.hpp"
#include "amodal/alpha.hpp"
#include "amodal/backends.hpp"
#include "amodal/error.hpp"

namespace amodal {

/// How the canvas expansion is decided.
///  - Hybrid: agent reasoning anchored by the visible-mask bounding box prior.
///  - AgentOnly: agent reasoning from the image alone.
///  - BboxOnly: touched edges only; no proportion is predicted.
enum class BoundaryStrategy { Hybrid, AgentOnly, BboxOnly };

std::string to_string(BoundaryStrategy s);
BoundaryStrategy boundary_strategy_from_string(const std::string& name);

struct PipelineConfig {
  /// Unset means default_dilation_radius() of the input.
  std::optional<std::size_t> dilation_radius;
  bool protect_visible = true;
  std::size_t edge_tolerance = 2;
  Color background = kWhite;

  int max_retries = 3;
  bool single_agent = false;
  BoundaryStrategy boundary_strategy = BoundaryStrategy::Hybrid;
  /// Expansion applied to each touched edge under BboxOnly, which has no proportion of its own.
  double bbox_only_fraction = 0.25;
  bool concurrent_agents = true;
  std::size_t description_token_budget = kDefaultDescriptionBudget;
  double temperature = 0.0;
  std::optional<std::uint64_t> chat_seed;

  int steps = kDefaultDenoisingSteps;
  std::uint64_t seed = 0;

  AlphaConfig alpha;

  void validate() const;
};

struct Backends {
  std::shared_ptr<ReasoningBackend> reasoning;
  std::shared_ptr<SegmentationBackend> segmentation;
  std::shared_ptr<InpaintingBackend> inpainting;
  std::shared_ptr<MetricBackend> metrics;  // optional
};

struct AgentTranscript {
  std::string agent;
  int attempts = 0;
  std::vector<std::string> requests;   // text of each user turn sent
  std::vector<std::string> responses;  // raw replies
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineTrace {
  std::vector<StageTiming> timings;
  std::vector<AgentTranscript> transcripts;
  std::vector<std::string> warnings;
  std::size_t inpaint_calls = 0;
  bool inpainting_skipped = false;
};

/// Direction/proportion view of the boundary decision.
struct BoundaryEstimate {
  EdgeSet directions;
  /// Absent under BboxOnly.
  std::optional<ExpansionSpec> proportions;
  /// Expansion actually applied to the canvas.
  ExpansionSpec applied;
};

/// Output of the spatial-reasoning half of the pipeline.
struct SpatialAnalysis {
  OcclusionFinding occlusion;
  BinaryMask visible_mask;
  std::vector<BinaryMask> occluder_masks;
  Rect visible_bbox;
  EdgeSet touched_edges;
  BoundaryFinding boundary;
  BoundaryEstimate estimate;
  std::optional<DescriptionFinding> description;
  CanvasPlacement placement;
  BinaryMask visible_canvas;
  BinaryMask inpaint_mask;
  std::size_t dilation_radius = 0;
};

struct PipelineResult {
  SpatialAnalysis spatial;
  DescriptionFinding prompt;
  Image visible_only;
  Image masked_input;
  Image completed;
  AttentionBundle attention;
  BinaryMask coarse_mask;
  BinaryMask fused_mask;
  BinaryMask alpha;
  Image rgba;
  PipelineTrace trace;
};

/// Any stage failure. `stage` is one of occlusion, segmentation, boundary,
/// description, single_agent, geometry, input_prep, inpainting, alpha.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& message, PipelineTrace trace)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)), message_(message), trace_(std::move(trace)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& message() const noexcept { return message_; }
  const PipelineTrace& trace() const noexcept { return trace_; }

 private:
  std::string stage_;
  std::string message_;
  PipelineTrace trace_;
};

/// Occlusion, segmentation, boundary (and optionally description) agents, then canvas and mask composition.
SpatialAnalysis analyze_spatial(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends,
                                PipelineTrace& trace, bool with_description);

/// Runs every stage with exactly one inpainting call, or none when the
/// inpainting mask is empty.
PipelineResult run_pipeline(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends);

/// The combined one-prompt baseline, with retries.
CombinedFindings run_single_agent(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends,
                                  PipelineTrace& trace);

}  // namespace amodal
