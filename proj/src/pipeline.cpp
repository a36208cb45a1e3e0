#include "amodal/pipeline.hpp"

#include <chrono>
#include <future>
#include <utility>

#include "amodal/error.hpp"

namespace amodal {

std::string to_string(BoundaryStrategy s) {
  switch (s) {
    case BoundaryStrategy::Hybrid: return "hybrid";
    case BoundaryStrategy::AgentOnly: return "agent-only";
    case BoundaryStrategy::BboxOnly: return "bbox-only";
  }
  return "?";
}

BoundaryStrategy boundary_strategy_from_string(const std::string& name) {
  if (name == "hybrid") return BoundaryStrategy::Hybrid;
  if (name == "agent-only") return BoundaryStrategy::AgentOnly;
  if (name == "bbox-only") return BoundaryStrategy::BboxOnly;
  throw ValidationError("unknown boundary strategy '" + name + "' (expected bbox-only, agent-only or hybrid)");
}

void PipelineConfig::validate() const {
  if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (!(bbox_only_fraction >= 0.0 && bbox_only_fraction <= ExpansionSpec::kMaxFraction)) {
    throw ValidationError("bbox_only_fraction must lie in [0, 2]");
  }
  if (description_token_budget == 0) throw ValidationError("description_token_budget must be positive");
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  alpha.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto run_stage(const std::string& name, PipelineTrace& trace, F&& fn) -> decltype(fn()) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      trace.timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
    } else {
      auto result = fn();
      trace.timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
      return result;
    }
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what(), trace);
  }
}

template <typename Parse>
auto ask_agent(ChatMessages messages, Parse&& parse, const PipelineConfig& cfg, ReasoningBackend& backend,
               AgentTranscript& tx) -> decltype(parse(std::string())) {
  const ChatOptions options{cfg.temperature, cfg.chat_seed};
  for (int attempt = 0;; ++attempt) {
    tx.attempts = attempt + 1;
    tx.requests.push_back(messages.back().text);
    std::string reply = backend.chat(messages, options);
    tx.responses.push_back(reply);
    try {
      return parse(reply);
    } catch (const ParseError& e) {
      if (attempt >= cfg.max_retries) throw;
      messages.push_back({"assistant", reply, std::nullopt});
      messages.push_back({"user",
                          std::string("That reply could not be used (") + e.what() +
                              "). Answer again with only the JSON object in the requested schema.",
                          std::nullopt});
    }
  }
}

EdgeSet nonzero_edges(const ExpansionSpec& e) {
  EdgeSet s;
  if (e.left > 0) s.insert(Edge::Left);
  if (e.right > 0) s.insert(Edge::Right);
  if (e.top > 0) s.insert(Edge::Top);
  if (e.bottom > 0) s.insert(Edge::Bottom);
  return s;
}

BoundaryEstimate estimate_from(const BoundaryFinding& f) {
  return {nonzero_edges(f.expansion), f.expansion, f.expansion};
}

struct AgentOutcome {
  BoundaryFinding finding;
  BoundaryEstimate estimate;
  AgentTranscript transcript;
  bool used_agent = false;
};

AgentOutcome decide_boundary(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends,
                             const BoundaryPrior& prior) {
  AgentOutcome out;
  out.transcript.agent = "boundary";
  if (cfg.boundary_strategy == BoundaryStrategy::BboxOnly) {
    out.finding.truncated = !prior.touched.empty();
    out.finding.rationale = "bounding box touches the image edge";
    for (Edge e : prior.touched) {
      switch (e) {
        case Edge::Left: out.finding.expansion.left = cfg.bbox_only_fraction; break;
        case Edge::Right: out.finding.expansion.right = cfg.bbox_only_fraction; break;
        case Edge::Top: out.finding.expansion.top = cfg.bbox_only_fraction; break;
        case Edge::Bottom: out.finding.expansion.bottom = cfg.bbox_only_fraction; break;
      }
    }
    out.estimate = {prior.touched, std::nullopt, out.finding.expansion};
    return out;
  }
  std::optional<BoundaryPrior> maybe_prior;
  if (cfg.boundary_strategy == BoundaryStrategy::Hybrid) maybe_prior = prior;
  out.used_agent = true;
  out.finding = ask_agent(build_boundary_prompt(q, maybe_prior), parse_boundary_response, cfg,
                          *backends.reasoning, out.transcript);
  out.estimate = estimate_from(out.finding);
  return out;
}

struct DescriptionOutcome {
  DescriptionFinding finding;
  AgentTranscript transcript;
};

DescriptionOutcome describe(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends) {
  DescriptionOutcome out;
  out.transcript.agent = "description";
  const std::size_t budget = cfg.description_token_budget;
  out.finding = ask_agent(
      build_description_prompt(q), [budget](const std::string& t) { return parse_description_response(t, budget); },
      cfg, *backends.reasoning, out.transcript);
  return out;
}

void require_backends(const Backends& b, bool need_inpainting) {
  if (!b.reasoning) throw ValidationError("no reasoning backend configured");
  if (!b.segmentation) throw ValidationError("no segmentation backend configured");
  if (need_inpainting && !b.inpainting) throw ValidationError("no inpainting backend configured");
}

}  // namespace

CombinedFindings run_single_agent(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends,
                                  PipelineTrace& trace) {
  AgentTranscript tx;
  tx.agent = "single_agent";
  const std::size_t budget = cfg.description_token_budget;
  try {
    auto found = ask_agent(
        build_single_agent_prompt(q),
        [budget](const std::string& t) { return parse_single_agent_response(t, budget); }, cfg, *backends.reasoning,
        tx);
    trace.transcripts.push_back(std::move(tx));
    return found;
  } catch (...) {
    trace.transcripts.push_back(std::move(tx));
    throw;
  }
}

SpatialAnalysis analyze_spatial(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends,
                                PipelineTrace& trace, bool with_description) {
  run_stage("validate", trace, [&] {
    q.validate();
    cfg.validate();
    require_backends(backends, false);
  });
  const Image rgb = to_rgb(q.image);
  const std::size_t width = rgb.width(), height = rgb.height();
  SpatialAnalysis sa;

  std::optional<CombinedFindings> combined;
  if (cfg.single_agent) {
    combined = run_stage("single_agent", trace, [&] { return run_single_agent(q, cfg, backends, trace); });
    sa.occlusion = combined->occlusion;
  } else {
    AgentTranscript tx{"occlusion", 0, {}, {}};
    try {
      sa.occlusion = run_stage("occlusion", trace, [&] {
        return ask_agent(build_occlusion_prompt(q), parse_occlusion_response, cfg, *backends.reasoning, tx);
      });
    } catch (const PipelineError& e) {
      trace.transcripts.push_back(tx);
      throw PipelineError("occlusion", e.message(), trace);
    }
    trace.transcripts.push_back(std::move(tx));
  }

  run_stage("segmentation", trace, [&] {
    auto check = [&](const Segmentation& s, const std::string& label) {
      if (!rgb.same_dims(s.mask)) throw DimensionError("mask for '" + label + "' does not match image dims");
    };
    Segmentation target = backends.segmentation->segment(rgb, sa.occlusion.target);
    check(target, sa.occlusion.target);
    if (target.mask.empty()) throw ValidationError("target '" + sa.occlusion.target + "' has no visible pixels");
    sa.visible_mask = std::move(target.mask);
    for (const auto& label : sa.occlusion.occluders) {
      Segmentation s = backends.segmentation->segment(rgb, label);
      check(s, label);
      sa.occluder_masks.push_back(std::move(s.mask));
    }
  });

  sa.visible_bbox = *bbox(sa.visible_mask);
  sa.touched_edges = edges_touched(sa.visible_bbox, width, height, cfg.edge_tolerance);

  if (combined) {
    sa.boundary = combined->boundary;
    sa.estimate = estimate_from(sa.boundary);
    if (with_description) sa.description = combined->description;
  } else {
    const BoundaryPrior prior{sa.touched_edges, sa.visible_bbox, width, height};
    auto boundary_job = [&] { return decide_boundary(q, cfg, backends, prior); };
    auto description_job = [&] { return describe(q, cfg, backends); };

    std::future<AgentOutcome> boundary_future;
    std::future<DescriptionOutcome> description_future;
    const auto launch = cfg.concurrent_agents ? std::launch::async : std::launch::deferred;
    boundary_future = std::async(launch, boundary_job);
    if (with_description) description_future = std::async(launch, description_job);

    // Transcripts are appended in a fixed order regardless of completion order.
    std::optional<PipelineError> failure;
    try {
      AgentOutcome b = run_stage("boundary", trace, [&] { return boundary_future.get(); });
      sa.boundary = b.finding;
      sa.estimate = b.estimate;
      if (b.used_agent) trace.transcripts.push_back(std::move(b.transcript));
    } catch (const PipelineError& e) {
      failure = e;
    }
    if (with_description) {
      try {
        DescriptionOutcome d = run_stage("description", trace, [&] { return description_future.get(); });
        sa.description = d.finding;
        trace.transcripts.push_back(std::move(d.transcript));
      } catch (const PipelineError& e) {
        if (!failure) failure = e;
      }
    }
    if (failure) throw PipelineError(failure->stage(), failure->message(), trace);
  }
  for (const auto& w : sa.boundary.warnings) trace.warnings.push_back("boundary: " + w);

  run_stage("geometry", trace, [&] {
    sa.placement = compute_canvas(width, height, sa.estimate.applied);
    sa.dilation_radius = cfg.dilation_radius.value_or(default_dilation_radius(width, height));
    sa.inpaint_mask = compose_inpaint_mask(sa.occluder_masks, sa.visible_mask, sa.placement, {sa.dilation_radius},
                                           cfg.protect_visible);
    sa.visible_canvas = place_mask(sa.visible_mask, sa.placement);
  });
  return sa;
}

PipelineResult run_pipeline(const TaskQuery& q, const PipelineConfig& cfg, const Backends& backends) {
  PipelineResult r;
  run_stage("validate", r.trace, [&] { require_backends(backends, true); });
  r.spatial = analyze_spatial(q, cfg, backends, r.trace, true);
  r.prompt = *r.spatial.description;
  const SpatialAnalysis& sa = r.spatial;

  run_stage("input_prep", r.trace, [&] {
    r.visible_only = extract_visible(to_rgb(q.image), sa.visible_mask, cfg.background);
    r.masked_input = place_on_canvas(r.visible_only, sa.placement, cfg.background);
  });

  const std::size_t cw = sa.placement.new_width, ch = sa.placement.new_height;
  if (sa.inpaint_mask.empty()) {
    // Nothing to synthesize: the visible object is already the whole object.
    r.trace.inpainting_skipped = true;
    r.completed = r.masked_input;
    r.attention = AttentionBundle::zeros(latent_dim(cw), latent_dim(ch));
    r.coarse_mask = BinaryMask(cw, ch);
    r.fused_mask = sa.visible_canvas;
    r.alpha = sa.visible_canvas;
  } else {
    run_stage("inpainting", r.trace, [&] {
      InpaintParams params;
      params.steps = cfg.steps;
      params.seed = cfg.seed;
      params.want_attention = true;
      params.attn_last_n = cfg.alpha.attn_last_n;
      ++r.trace.inpaint_calls;
      InpaintOutput out = backends.inpainting->inpaint(r.masked_input, sa.inpaint_mask, r.prompt.prompt_text, params);
      if (!out.image.same_dims(r.masked_input)) throw DimensionError("inpainting output dims differ from input");
      r.completed = to_rgb(out.image);
      enforce_passthrough(r.masked_input, sa.inpaint_mask, r.completed);
      if (out.attention) {
        out.attention->validate();
        r.attention = std::move(*out.attention);
      } else {
        r.trace.warnings.push_back("inpainting: backend returned no attention; using a flat map");
        r.attention = AttentionBundle::zeros(latent_dim(cw), latent_dim(ch));
      }
    });
    run_stage("alpha", r.trace, [&] {
      AlphaExtraction a = extract_alpha(r.completed, r.attention, sa.visible_canvas, cfg.alpha);
      r.coarse_mask = std::move(a.coarse);
      r.fused_mask = std::move(a.fused);
      r.alpha = std::move(a.alpha);
      for (auto& w : a.warnings) r.trace.warnings.push_back("alpha: " + w);
    });
  }
  r.rgba = run_stage("compose", r.trace, [&] { return compose_rgba(r.completed, r.alpha); });
  return r;
}

}  // namespace amodal
