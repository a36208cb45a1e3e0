#include "amodal/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>

#include "amodal/error.hpp"

namespace amodal {

using nlohmann::json;

namespace {

constexpr const char* kOcclusionSchema = R"({"target": string, "occluders": [string]})";
constexpr const char* kBoundarySchema =
    R"({"truncated": bool, "expansion": {"left": number, "right": number, "top": number, "bottom": number}, "rationale": string})";
constexpr const char* kDescriptionSchema = R"({"description": string})";
constexpr const char* kCombinedSchema =
    R"({"target": string, "occluders": [string], "truncated": bool, "expansion": {"left": number, "right": number, "top": number, "bottom": number}, "description": string})";

constexpr const char* kJsonOnly = "Reply with a single JSON object and nothing else.";

constexpr const char* kOcclusionSystem =
    "You analyse occlusion in photographs. Given an image and a request naming one object, "
    "identify that object and determine the front-back ordering of the scene around it. "
    "List every object that lies in front of the target and hides part of it. Do not list "
    "objects that are behind the target or merely adjacent to it.";

constexpr const char* kBoundarySystem =
    "You judge whether an object in a photograph is cut off by the image frame. When it is, "
    "estimate how far the canvas must grow on each side so the whole object fits. Express each "
    "side as a fraction of the original image size: 0.1 on the right means widening the image "
    "by 10% on the right. Parts of the object hidden by other objects near the border still "
    "count as continuing past the frame if the object extends that way. Use fractions between "
    "0 and 2.";

constexpr const char* kDescriptionSystem =
    "You write prompts for an image inpainting model that must draw a partially hidden object "
    "in full. Describe the entire object as it would look unobstructed.";

constexpr const char* kDescriptionRules =
    "Start with the attributes you can see (color, texture, material, markings), then its pose "
    "and orientation, then the most plausible appearance of the hidden parts. Write one "
    "paragraph. Do not mention any occluding objects or the fact that the object is hidden.";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

ChatMessages two_turn(const char* system, std::string user, const Image& image) {
  return {ChatMessage{"system", system, std::nullopt}, ChatMessage{"user", std::move(user), image}};
}

// Thrown by validators; caught and rewrapped as ParseError with the raw text.
struct SchemaError {
  std::string message;
};

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError{std::string("missing key '") + key + "'"};
  return j.at(key);
}

OcclusionFinding validate_occlusion(const json& j) {
  const json& target = require(j, "target");
  if (!target.is_string() || trim(target.get<std::string>()).empty()) {
    throw SchemaError{"'target' must be a non-empty string"};
  }
  const json& occ = require(j, "occluders");
  if (!occ.is_array()) throw SchemaError{"'occluders' must be an array of strings"};
  OcclusionFinding f;
  f.target = trim(target.get<std::string>());
  std::vector<std::string> seen{lower(f.target)};
  for (const auto& o : occ) {
    if (!o.is_string()) throw SchemaError{"'occluders' must be an array of strings"};
    std::string label = trim(o.get<std::string>());
    if (label.empty()) continue;
    const std::string key = lower(label);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    f.occluders.push_back(std::move(label));
  }
  return f;
}

BoundaryFinding validate_boundary(const json& j) {
  const json& truncated = require(j, "truncated");
  if (!truncated.is_boolean()) throw SchemaError{"'truncated' must be a boolean"};
  const json& exp = require(j, "expansion");
  if (!exp.is_object()) throw SchemaError{"'expansion' must be an object"};
  BoundaryFinding f;
  f.truncated = truncated.get<bool>();
  if (j.contains("rationale") && j["rationale"].is_string()) f.rationale = trim(j["rationale"].get<std::string>());
  for (const auto& [key, value] : exp.items()) {
    Edge edge;
    try {
      edge = edge_from_string(lower(key));
    } catch (const ValidationError&) {
      throw SchemaError{"unknown expansion side '" + key + "'"};
    }
    if (!value.is_number()) throw SchemaError{"expansion '" + key + "' must be a number"};
    double v = value.get<double>();
    if (!std::isfinite(v)) throw SchemaError{"expansion '" + key + "' is not finite"};
    if (v < 0.0) {
      f.warnings.push_back("expansion " + key + "=" + fmt3(v) + " clamped to 0");
      v = 0.0;
    } else if (v > ExpansionSpec::kMaxFraction) {
      f.warnings.push_back("expansion " + key + "=" + fmt3(v) + " clamped to 2.0");
      v = ExpansionSpec::kMaxFraction;
    }
    switch (edge) {
      case Edge::Left: f.expansion.left = v; break;
      case Edge::Right: f.expansion.right = v; break;
      case Edge::Top: f.expansion.top = v; break;
      case Edge::Bottom: f.expansion.bottom = v; break;
    }
  }
  if (!f.truncated && !f.expansion.is_zero()) {
    f.warnings.push_back("expansion ignored because truncated=false");
    f.expansion = {};
  }
  return f;
}

DescriptionFinding validate_description(const json& j, std::size_t budget) {
  const json& d = require(j, "description");
  if (!d.is_string()) throw SchemaError{"'description' must be a string"};
  const std::string text = trim(d.get<std::string>());
  if (text.empty()) throw SchemaError{"'description' is empty"};
  return {truncate_to_budget(text, budget)};
}

template <typename T>
T parse_with(std::string_view text, const std::function<T(const json&)>& validate) {
  const auto candidates = json_objects_in(text);
  if (candidates.empty()) throw ParseError("no JSON object found in response", std::string(text));
  std::string first_error;
  for (const auto& c : candidates) {
    try {
      return validate(c);
    } catch (const SchemaError& e) {
      if (first_error.empty()) first_error = e.message;
    }
  }
  throw ParseError("schema violation: " + first_error, std::string(text));
}

}  // namespace

void TaskQuery::validate() const {
  if (trim(text).empty()) throw ValidationError("query text is empty");
  if (image.empty()) throw ValidationError("query image is empty");
}

std::vector<json> json_objects_in(std::string_view text) {
  std::vector<json> out;
  std::size_t i = 0;
  while ((i = text.find('{', i)) != std::string_view::npos) {
    int depth = 0;
    bool in_string = false, escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t k = i; k < text.size(); ++k) {
      const char c = text[k];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        end = k;
        break;
      }
    }
    if (end == std::string_view::npos) break;
    json parsed = json::parse(text.substr(i, end - i + 1), nullptr, /*allow_exceptions=*/false);
    if (parsed.is_object()) {
      out.push_back(std::move(parsed));
      i = end + 1;
    } else {
      ++i;
    }
  }
  return out;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string truncate_to_budget(std::string_view text, std::size_t budget) {
  if (count_tokens(text) <= budget) return std::string(text);
  // End offsets (exclusive) of each sentence.
  std::size_t kept_end = 0;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    const bool terminal = c == '.' || c == '!' || c == '?';
    const bool boundary = k + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[k + 1]));
    if (!terminal || !boundary) continue;
    if (count_tokens(text.substr(0, k + 1)) > budget) break;
    kept_end = k + 1;
  }
  if (kept_end > 0) return trim(text.substr(0, kept_end));
  std::string out;
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word && ++words > budget) break;
    in_word = !space;
    out += c;
  }
  return trim(out);
}

ChatMessages build_occlusion_prompt(const TaskQuery& q) {
  q.validate();
  std::string user = "Request: \"" + q.text + "\"\n";
  user += "Name the target object and list its occluders, nearest first.\n";
  user += std::string("Schema: ") + kOcclusionSchema + "\n" + kJsonOnly;
  return two_turn(kOcclusionSystem, std::move(user), q.image);
}

OcclusionFinding parse_occlusion_response(std::string_view text) {
  return parse_with<OcclusionFinding>(text, validate_occlusion);
}

ChatMessages build_boundary_prompt(const TaskQuery& q, const std::optional<BoundaryPrior>& prior) {
  q.validate();
  std::string user = "Target object: \"" + q.text + "\"\n";
  if (prior) {
    const Rect& b = prior->bbox;
    const double w = static_cast<double>(prior->width), h = static_cast<double>(prior->height);
    user += "Bounding box of the visible part (normalized x0, y0, x1, y1): [" + fmt3(double(b.x) / w) + ", " +
            fmt3(double(b.y) / h) + ", " + fmt3(double(b.x + b.width) / w) + ", " +
            fmt3(double(b.y + b.height) / h) + "]\n";
    user += "Image edges touched by the bounding box: ";
    if (prior->touched.empty()) {
      user += "none";
    } else {
      bool first = true;
      for (Edge e : prior->touched) {
        user += (first ? "" : ", ") + to_string(e);
        first = false;
      }
    }
    user += "\nEdge contact is a hint, not proof. The object may also continue past an edge it "
            "does not touch when occluders hide it near the border.\n";
  } else {
    user += "Judge truncation from the image alone.\n";
  }
  user += std::string("Schema: ") + kBoundarySchema + "\n";
  user += "Set truncated=false and all fractions to 0 when the whole object is inside the frame.\n";
  user += kJsonOnly;
  return two_turn(kBoundarySystem, std::move(user), q.image);
}

BoundaryFinding parse_boundary_response(std::string_view text) {
  return parse_with<BoundaryFinding>(text, validate_boundary);
}

ChatMessages build_description_prompt(const TaskQuery& q) {
  q.validate();
  std::string user = "Object: \"" + q.text + "\"\n";
  user += std::string(kDescriptionRules) + "\n";
  user += std::string("Schema: ") + kDescriptionSchema + "\n" + kJsonOnly;
  return two_turn(kDescriptionSystem, std::move(user), q.image);
}

DescriptionFinding parse_description_response(std::string_view text, std::size_t token_budget) {
  return parse_with<DescriptionFinding>(
      text, [token_budget](const json& j) { return validate_description(j, token_budget); });
}

ChatMessages build_single_agent_prompt(const TaskQuery& q) {
  q.validate();
  std::string user = "Request: \"" + q.text + "\"\n";
  user += "1. Name the target object and list the objects in front of it that hide part of it.\n";
  user += "2. Decide whether the image frame cuts the object off and, if so, how far the canvas must "
          "grow on each side as a fraction of the image size (0 to 2).\n";
  user += std::string("3. Describe the whole object for an inpainting model. ") + kDescriptionRules + "\n";
  user += std::string("Schema: ") + kCombinedSchema + "\n" + kJsonOnly;
  return two_turn("You complete partially hidden objects in photographs.", std::move(user), q.image);
}

CombinedFindings parse_single_agent_response(std::string_view text, std::size_t token_budget) {
  return parse_with<CombinedFindings>(text, [token_budget](const json& j) {
    return CombinedFindings{validate_occlusion(j), validate_boundary(j), validate_description(j, token_budget)};
  });
}

}  // namespace amodal
