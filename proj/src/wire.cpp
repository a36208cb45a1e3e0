#include "amodal/wire.hpp"

#include <cmath>

#include "amodal/codec.hpp"
#include "amodal/error.hpp"
#include "amodal/png_io.hpp"

namespace amodal::wire {

using nlohmann::json;

std::string excerpt(const json& j, std::size_t limit) {
  std::string s = j.dump();
  if (s.size() > limit) s = s.substr(0, limit) + "...";
  return s;
}

namespace {

[[noreturn]] void fail(const std::string& what, const json& j) {
  throw ProtocolError(what + " (payload: " + excerpt(j) + ")");
}

const json& field(const json& j, const char* name, json::value_t type) {
  if (!j.is_object() || !j.contains(name)) fail(std::string("missing field '") + name + "'", j);
  const json& v = j.at(name);
  const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type;
  if (!ok) fail(std::string("field '") + name + "' has wrong type", j);
  return v;
}

std::string b64_field(const json& j, const char* name) {
  const std::string& text = field(j, name, json::value_t::string).get_ref<const std::string&>();
  try {
    return base64_decode(text);
  } catch (const ProtocolError& e) {
    fail(std::string("field '") + name + "': " + e.what(), j);
  }
}

Image png_field(const json& j, const char* name) {
  const std::string bytes = b64_field(j, name);
  try {
    return decode_png(bytes);
  } catch (const IoError& e) {
    fail(std::string("field '") + name + "': " + e.what(), j);
  }
}

BinaryMask mask_field(const json& j, const char* name) {
  const std::string bytes = b64_field(j, name);
  try {
    return decode_mask_png(bytes);
  } catch (const IoError& e) {
    fail(std::string("field '") + name + "': " + e.what(), j);
  }
}

std::int64_t int_field(const json& j, const char* name) {
  const json& v = field(j, name, json::value_t::number_float);
  if (!v.is_number_integer()) fail(std::string("field '") + name + "' must be an integer", j);
  return v.get<std::int64_t>();
}

std::optional<double> optional_number(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  const double v = field(j, name, json::value_t::number_float).get<double>();
  if (!std::isfinite(v)) fail(std::string("field '") + name + "' is not finite", j);
  return v;
}

}  // namespace

json encode_segment_request(const Image& image, const std::string& label) {
  return {{"image_png_b64", base64_encode(encode_png(image))}, {"label", label}};
}

SegmentRequest decode_segment_request(const json& j) {
  return {png_field(j, "image_png_b64"), field(j, "label", json::value_t::string).get<std::string>()};
}

json encode_segment_response(const Segmentation& s) {
  return {{"mask_png_b64", base64_encode(encode_mask_png(s.mask))}, {"confidence", s.confidence}};
}

Segmentation decode_segment_response(const json& j, std::size_t width, std::size_t height) {
  BinaryMask mask = mask_field(j, "mask_png_b64");
  if (mask.width() != width || mask.height() != height) fail("segment: mask dims differ from image", j);
  const double conf = field(j, "confidence", json::value_t::number_float).get<double>();
  if (!(conf >= 0.0 && conf <= 1.0)) fail("segment: confidence outside [0,1]", j);
  return {std::move(mask), conf};
}

json encode_inpaint_request(const Image& image, const BinaryMask& mask, const std::string& prompt,
                            const InpaintParams& params) {
  return {{"image_png_b64", base64_encode(encode_png(image))},
          {"mask_png_b64", base64_encode(encode_mask_png(mask))},
          {"prompt", prompt},
          {"steps", params.steps},
          {"seed", params.seed},
          {"want_attention", params.want_attention},
          {"attn_last_n", params.attn_last_n}};
}

InpaintRequest decode_inpaint_request(const json& j) {
  InpaintRequest r{png_field(j, "image_png_b64"), mask_field(j, "mask_png_b64"),
                   field(j, "prompt", json::value_t::string).get<std::string>(), {}};
  if (!r.image.same_dims(r.mask)) fail("inpaint: image and mask dims differ", j);
  r.params.steps = static_cast<int>(int_field(j, "steps"));
  r.params.seed = static_cast<std::uint64_t>(int_field(j, "seed"));
  r.params.want_attention = field(j, "want_attention", json::value_t::boolean).get<bool>();
  r.params.attn_last_n = static_cast<int>(int_field(j, "attn_last_n"));
  if (r.params.steps < 1 || r.params.attn_last_n < 1) fail("inpaint: steps and attn_last_n must be positive", j);
  return r;
}

json encode_inpaint_response(const InpaintOutput& out) {
  json j = {{"image_png_b64", base64_encode(encode_png(out.image))}};
  if (out.attention) {
    const AttentionBundle& a = *out.attention;
    json att = {{"latent_w", a.latent_width},
                {"latent_h", a.latent_height},
                {"cross_f32_b64", base64_encode(pack_f32le(a.cross))}};
    if (a.self_refined) att["self_refined_f32_b64"] = base64_encode(pack_f32le(*a.self_refined));
    j["attention"] = std::move(att);
  }
  return j;
}

InpaintOutput decode_inpaint_response(const json& j, std::size_t width, std::size_t height, bool want_attention) {
  InpaintOutput out{png_field(j, "image_png_b64"), std::nullopt};
  if (out.image.width() != width || out.image.height() != height) fail("inpaint: output dims differ from input", j);
  if (!j.contains("attention") || j.at("attention").is_null()) {
    if (want_attention) fail("inpaint: attention requested but absent", j);
    return out;
  }
  const json& att = field(j, "attention", json::value_t::object);
  AttentionBundle b;
  b.latent_width = static_cast<std::size_t>(int_field(att, "latent_w"));
  b.latent_height = static_cast<std::size_t>(int_field(att, "latent_h"));
  if (b.latent_width != latent_dim(width) || b.latent_height != latent_dim(height)) {
    fail("inpaint: attention grid " + std::to_string(b.latent_width) + "x" + std::to_string(b.latent_height) +
             " does not match ceil(dim/8) grid " + std::to_string(latent_dim(width)) + "x" +
             std::to_string(latent_dim(height)),
         j);
  }
  try {
    b.cross = unpack_f32le(b64_field(att, "cross_f32_b64"));
    if (att.contains("self_refined_f32_b64") && !att.at("self_refined_f32_b64").is_null()) {
      b.self_refined = unpack_f32le(b64_field(att, "self_refined_f32_b64"));
    }
    b.validate();
  } catch (const ProtocolError& e) {
    fail(std::string("inpaint: ") + e.what(), j);
  }
  out.attention = std::move(b);
  return out;
}

json encode_metrics_request(const Image& a, const Image* b, const std::string* label) {
  json j = {{"a_png_b64", base64_encode(encode_png(a))}};
  if (b) j["b_png_b64"] = base64_encode(encode_png(*b));
  if (label) j["label"] = *label;
  return j;
}

MetricsRequest decode_metrics_request(const json& j) {
  MetricsRequest r{png_field(j, "a_png_b64"), std::nullopt, std::nullopt};
  if (j.contains("b_png_b64")) r.b = png_field(j, "b_png_b64");
  if (j.contains("label")) r.label = field(j, "label", json::value_t::string).get<std::string>();
  if (r.b && !r.a.same_dims(*r.b)) fail("metrics: a and b dims differ", j);
  return r;
}

json encode_metrics_response(const MetricScores& s) {
  json j = json::object();
  if (s.clip) j["clip"] = *s.clip;
  if (s.lpips) j["lpips"] = *s.lpips;
  if (s.feature_sim) j["feature_sim"] = *s.feature_sim;
  return j;
}

MetricScores decode_metrics_response(const json& j) {
  if (!j.is_object()) fail("metrics: response is not an object", j);
  MetricScores s{optional_number(j, "clip"), optional_number(j, "lpips"), optional_number(j, "feature_sim")};
  if (s.feature_sim && (*s.feature_sim < 0.0 || *s.feature_sim > 1.0)) fail("metrics: feature_sim outside [0,1]", j);
  if (s.lpips && *s.lpips < 0.0) fail("metrics: negative lpips", j);
  return s;
}

}  // namespace amodal::wire
