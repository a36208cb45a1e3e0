#include <doctest.h>

#include <functional>

#include "amodal/demo_scene.hpp"
#include "amodal/error.hpp"
#include "amodal/pipeline.hpp"

using namespace amodal;

namespace {

// Delegates to a scripted mock unless `override_reply` returns a reply.
class ScriptedReasoning final : public ReasoningBackend {
 public:
  std::function<std::optional<std::string>(const ChatMessages&)> override_reply;
  MockReasoning base;
  std::string chat(const ChatMessages& m, const ChatOptions& o) override {
    if (override_reply) {
      if (auto r = override_reply(m)) return *r;
    }
    return base.chat(m, o);
  }
};

class FailingInpainting final : public InpaintingBackend {
 public:
  InpaintOutput inpaint(const Image&, const BinaryMask&, const std::string&, const InpaintParams&) override {
    throw TransportError("service down", 4);
  }
};

struct Rig {
  std::shared_ptr<ScriptedReasoning> reasoning = std::make_shared<ScriptedReasoning>();
  std::shared_ptr<MockInpainting> inpainting = std::make_shared<MockInpainting>();
  Backends backends;
  TaskQuery query;
  PipelineConfig cfg;
};

Rig rig(const DemoScene& scene) {
  Rig r;
  script_replies(r.reasoning->base, scene);
  r.backends.reasoning = r.reasoning;
  r.backends.segmentation = std::make_shared<MockSegmentation>(MockSegmentation::chroma(scene.colors, scene.chroma_distance));
  r.backends.inpainting = r.inpainting;
  r.query = {scene.image, scene.query};
  return r;
}

bool is_occlusion_prompt(const ChatMessages& m) {
  return m.size() >= 2 && m[1].text.find("list its occluders") != std::string::npos;
}

}  // namespace

TEST_CASE("clock tower runs end to end with one inpainting call") {
  auto r = rig(clock_tower_scene());
  const auto res = run_pipeline(r.query, r.cfg, r.backends);
  CHECK(res.trace.inpaint_calls == 1);
  CHECK(r.inpainting->calls() == 1);
  CHECK_FALSE(res.trace.inpainting_skipped);
  CHECK(res.spatial.occlusion.occluders == std::vector<std::string>{"trees"});
  CHECK(res.spatial.touched_edges == EdgeSet{Edge::Left, Edge::Bottom});
  CHECK(res.spatial.estimate.directions == EdgeSet{Edge::Left, Edge::Bottom});
  REQUIRE(res.spatial.estimate.proportions.has_value());
  CHECK(res.spatial.placement == CanvasPlacement{96, 96, 144, 144, 48, 0});
  CHECK(res.spatial.dilation_radius == 5);
  CHECK(res.rgba.channels() == 4);
  CHECK(res.rgba.width() == 144);
  CHECK(res.visible_only.width() == 96);
  CHECK(res.spatial.visible_canvas.subset_of(res.fused_mask));
  CHECK_FALSE(res.alpha.empty());
  CHECK(mask_intersect(res.spatial.inpaint_mask, res.spatial.visible_canvas).empty());
  // Everything outside the inpainting mask is the masked input.
  for (std::size_t y = 0; y < 144; ++y)
    for (std::size_t x = 0; x < 144; ++x)
      if (!res.spatial.inpaint_mask.at(x, y)) CHECK(res.completed.color_at(x, y) == res.masked_input.color_at(x, y));
  CHECK(res.prompt.prompt_text == clock_tower_scene().description);

  const auto again = run_pipeline(r.query, r.cfg, r.backends);
  CHECK(again.rgba == res.rgba);
  CHECK(again.alpha == res.alpha);
}

TEST_CASE("sequential and concurrent agents agree") {
  auto r = rig(clock_tower_scene());
  const auto a = run_pipeline(r.query, r.cfg, r.backends);
  r.cfg.concurrent_agents = false;
  const auto b = run_pipeline(r.query, r.cfg, r.backends);
  CHECK(a.rgba == b.rgba);
  REQUIRE(a.trace.transcripts.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.trace.transcripts[i].agent == b.trace.transcripts[i].agent);
}

TEST_CASE("an unoccluded, untruncated object skips inpainting") {
  auto r = rig(unoccluded_scene());
  const auto res = run_pipeline(r.query, r.cfg, r.backends);
  CHECK(res.trace.inpainting_skipped);
  CHECK(res.trace.inpaint_calls == 0);
  CHECK(r.inpainting->calls() == 0);
  CHECK(res.completed == res.masked_input);
  CHECK(res.alpha == res.spatial.visible_canvas);
  CHECK(res.spatial.placement.is_identity());
}

TEST_CASE("single-agent mode asks once") {
  auto r = rig(clock_tower_scene());
  r.cfg.single_agent = true;
  const auto res = run_pipeline(r.query, r.cfg, r.backends);
  REQUIRE(res.trace.transcripts.size() == 1);
  CHECK(res.trace.transcripts[0].agent == "single_agent");
  CHECK(res.spatial.placement.new_width == 144);
  CHECK(res.trace.inpaint_calls == 1);
}

TEST_CASE("malformed replies are retried with a correction turn") {
  auto r = rig(clock_tower_scene());
  r.reasoning->override_reply = [](const ChatMessages& m) -> std::optional<std::string> {
    if (is_occlusion_prompt(m) && m.size() < 6) return std::string("I think it is a tower.");
    if (is_occlusion_prompt(m)) return std::string(R"({"target": "clock tower", "occluders": ["trees"]})");
    return std::nullopt;
  };
  const auto res = run_pipeline(r.query, r.cfg, r.backends);
  const auto& tx = res.trace.transcripts[0];
  CHECK(tx.agent == "occlusion");
  CHECK(tx.attempts == 3);
  CHECK(tx.responses[0] == "I think it is a tower.");
  CHECK(tx.requests[1].find("could not be used") != std::string::npos);
}

TEST_CASE("exhausted retries fail the occlusion stage") {
  auto r = rig(clock_tower_scene());
  r.cfg.max_retries = 1;
  r.reasoning->override_reply = [](const ChatMessages& m) -> std::optional<std::string> {
    if (is_occlusion_prompt(m)) return std::string("no idea");
    return std::nullopt;
  };
  try {
    run_pipeline(r.query, r.cfg, r.backends);
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "occlusion");
    REQUIRE(e.trace().transcripts.size() == 1);
    CHECK(e.trace().transcripts[0].attempts == 2);
    CHECK(std::string(e.what()).rfind("[occlusion]", 0) == 0);
  }
}

TEST_CASE("stage tags on failures") {
  SUBCASE("segmentation") {
    auto r = rig(clock_tower_scene());
    r.reasoning->override_reply = [](const ChatMessages& m) -> std::optional<std::string> {
      if (is_occlusion_prompt(m)) return std::string(R"({"target": "clock tower", "occluders": ["dragon"]})");
      return std::nullopt;
    };
    CHECK_THROWS_WITH_AS(run_pipeline(r.query, r.cfg, r.backends), doctest::Contains("[segmentation]"), PipelineError);
  }
  SUBCASE("boundary") {
    auto r = rig(clock_tower_scene());
    r.cfg.max_retries = 0;
    r.reasoning->override_reply = [](const ChatMessages& m) -> std::optional<std::string> {
      if (m[1].text.find("Target object:") != std::string::npos) return std::string(R"({"truncated": 1})");
      return std::nullopt;
    };
    try {
      run_pipeline(r.query, r.cfg, r.backends);
      FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
      CHECK(e.stage() == "boundary");
    }
  }
  SUBCASE("inpainting") {
    auto r = rig(clock_tower_scene());
    r.backends.inpainting = std::make_shared<FailingInpainting>();
    try {
      run_pipeline(r.query, r.cfg, r.backends);
      FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
      CHECK(e.stage() == "inpainting");
      CHECK(e.trace().inpaint_calls == 1);
    }
  }
  SUBCASE("missing backend") {
    auto r = rig(clock_tower_scene());
    r.backends.inpainting.reset();
    CHECK_THROWS_WITH_AS(run_pipeline(r.query, r.cfg, r.backends), doctest::Contains("[validate]"), PipelineError);
  }
  SUBCASE("empty query") {
    auto r = rig(clock_tower_scene());
    r.query.text = "";
    CHECK_THROWS_AS(run_pipeline(r.query, r.cfg, r.backends), PipelineError);
  }
}

TEST_CASE("bbox-only reports directions without proportions") {
  auto r = rig(clock_tower_scene());
  r.cfg.boundary_strategy = BoundaryStrategy::BboxOnly;
  PipelineTrace trace;
  const auto sa = analyze_spatial(r.query, r.cfg, r.backends, trace, false);
  CHECK(sa.estimate.directions == EdgeSet{Edge::Left, Edge::Bottom});
  CHECK_FALSE(sa.estimate.proportions.has_value());
  CHECK(sa.estimate.applied == ExpansionSpec{0.25, 0.0, 0.0, 0.25});
  CHECK(sa.placement.new_width == 120);
  REQUIRE(trace.transcripts.size() == 1);
  CHECK(trace.transcripts[0].agent == "occlusion");
}

TEST_CASE("agent-only sends the prompt without the geometric prior") {
  auto r = rig(clock_tower_scene());
  r.cfg.boundary_strategy = BoundaryStrategy::AgentOnly;
  PipelineTrace trace;
  const auto sa = analyze_spatial(r.query, r.cfg, r.backends, trace, false);
  REQUIRE(trace.transcripts.size() == 2);
  CHECK(trace.transcripts[1].agent == "boundary");
  CHECK(trace.transcripts[1].requests[0].find("Judge truncation from the image alone") != std::string::npos);
  CHECK(sa.estimate.proportions.has_value());
}

TEST_CASE("protect_visible off lets the mask cover visible pixels near occluders") {
  auto r = rig(clock_tower_scene());
  r.cfg.protect_visible = false;
  PipelineTrace trace;
  const auto sa = analyze_spatial(r.query, r.cfg, r.backends, trace, false);
  CHECK_FALSE(mask_intersect(sa.inpaint_mask, sa.visible_canvas).empty());
}

TEST_CASE("config validation and strategy names") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.bbox_only_fraction = 3.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  for (auto s : {BoundaryStrategy::Hybrid, BoundaryStrategy::AgentOnly, BoundaryStrategy::BboxOnly})
    CHECK(boundary_strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(boundary_strategy_from_string("magic"), ValidationError);
}
