#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/backends.hpp"
#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

struct TaskQuery {
  Image image;
  std::string text;

  /// Throws ValidationError on an empty query or image.
  void validate() const;
};

struct OcclusionFinding {
  std::string target;
  std::vector<std::string> occluders;
  friend bool operator==(const OcclusionFinding&, const OcclusionFinding&) = default;
};

struct BoundaryFinding {
  bool truncated = false;
  ExpansionSpec expansion;
  std::string rationale;
  std::vector<std::string> warnings;
};

struct DescriptionFinding {
  std::string prompt_text;
  friend bool operator==(const DescriptionFinding&, const DescriptionFinding&) = default;
};

struct CombinedFindings {
  OcclusionFinding occlusion;
  BoundaryFinding boundary;
  DescriptionFinding description;
};

/// Geometric evidence handed to the boundary agent.
struct BoundaryPrior {
  EdgeSet touched;
  Rect bbox;
  std::size_t width = 0;
  std::size_t height = 0;
};

inline constexpr std::size_t kDefaultDescriptionBudget = 120;

ChatMessages build_occlusion_prompt(const TaskQuery& q);
OcclusionFinding parse_occlusion_response(std::string_view text);

/// Without a prior the prompt asks for image-only reasoning.
ChatMessages build_boundary_prompt(const TaskQuery& q, const std::optional<BoundaryPrior>& prior);
BoundaryFinding parse_boundary_response(std::string_view text);

ChatMessages build_description_prompt(const TaskQuery& q);
DescriptionFinding parse_description_response(std::string_view text,
                                              std::size_t token_budget = kDefaultDescriptionBudget);

/// One prompt asking for all three findings at once.
ChatMessages build_single_agent_prompt(const TaskQuery& q);
CombinedFindings parse_single_agent_response(std::string_view text,
                                             std::size_t token_budget = kDefaultDescriptionBudget);

/// Every top-level, balanced `{...}` span in `text` that parses as JSON, in order.
std::vector<nlohmann::json> json_objects_in(std::string_view text);

/// Word count under whitespace splitting.
std::size_t count_tokens(std::string_view text);
/// Keeps whole sentences while the word count stays within `budget`; falls
/// back to the first `budget` words when even the first sentence is too long.
std::string truncate_to_budget(std::string_view text, std::size_t budget);

}  // namespace amodal
