#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

#include "amodal/backends.hpp"

namespace amodal::wire {

// JSON bodies for the model-service protocol. Every binary payload is base64;
// images and masks travel as PNG, attention grids as little-endian float32.
//
//   POST /segment {image_png_b64, label} -> {mask_png_b64, confidence}
//   POST /inpaint {image_png_b64, mask_png_b64, prompt, steps, seed, want_attention, attn_last_n}
//              -> {image_png_b64, attention?: {latent_w, latent_h, cross_f32_b64, self_refined_f32_b64?}}
//   POST /metrics {a_png_b64, b_png_b64?, label?} -> {clip?, lpips?, feature_sim?}
//
// Decoders throw ProtocolError carrying an excerpt of the offending payload.

struct SegmentRequest {
  Image image;
  std::string label;
};

struct InpaintRequest {
  Image image;
  BinaryMask mask;
  std::string prompt;
  InpaintParams params;
};

struct MetricsRequest {
  Image a;
  std::optional<Image> b;
  std::optional<std::string> label;
};

struct MetricScores {
  std::optional<double> clip;
  std::optional<double> lpips;
  std::optional<double> feature_sim;
};

nlohmann::json encode_segment_request(const Image& image, const std::string& label);
SegmentRequest decode_segment_request(const nlohmann::json& j);
nlohmann::json encode_segment_response(const Segmentation& s);
Segmentation decode_segment_response(const nlohmann::json& j, std::size_t width, std::size_t height);

nlohmann::json encode_inpaint_request(const Image& image, const BinaryMask& mask, const std::string& prompt,
                                      const InpaintParams& params);
InpaintRequest decode_inpaint_request(const nlohmann::json& j);
nlohmann::json encode_inpaint_response(const InpaintOutput& out);
/// Validates output dims and the advertised latent grid against ceil(dim/8).
InpaintOutput decode_inpaint_response(const nlohmann::json& j, std::size_t width, std::size_t height,
                                      bool want_attention);

nlohmann::json encode_metrics_request(const Image& a, const Image* b, const std::string* label);
MetricsRequest decode_metrics_request(const nlohmann::json& j);
nlohmann::json encode_metrics_response(const MetricScores& s);
MetricScores decode_metrics_response(const nlohmann::json& j);

/// First `limit` characters of the serialized payload, for error messages.
std::string excerpt(const nlohmann::json& j, std::size_t limit = 160);

}  // namespace amodal::wire
