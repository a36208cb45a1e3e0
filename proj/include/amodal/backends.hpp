#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amodal/attention.hpp"
#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string text;
  std::optional<Image> image;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};
using ChatMessages = std::vector<ChatMessage>;

struct ChatOptions {
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

/// Stable SHA-256 over roles, texts and raw image samples (not PNG bytes).
std::string message_digest(const ChatMessages& messages);

class ReasoningBackend {
 public:
  virtual ~ReasoningBackend() = default;
  virtual std::string chat(const ChatMessages& messages, const ChatOptions& options) = 0;
};

struct Segmentation {
  BinaryMask mask;
  double confidence = 1.0;
};

class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual Segmentation segment(const Image& image, const std::string& label) = 0;
};

inline constexpr int kDefaultDenoisingSteps = 28;

struct InpaintParams {
  int steps = kDefaultDenoisingSteps;
  std::uint64_t seed = 0;
  bool want_attention = true;
  int attn_last_n = 15;
};

struct InpaintOutput {
  Image image;
  std::optional<AttentionBundle> attention;
};

class InpaintingBackend {
 public:
  virtual ~InpaintingBackend() = default;
  virtual InpaintOutput inpaint(const Image& image, const BinaryMask& mask, const std::string& prompt,
                                const InpaintParams& params) = 0;
};

class MetricBackend {
 public:
  virtual ~MetricBackend() = default;
  virtual double clip_score(const Image& image, const std::string& label) = 0;
  virtual double lpips(const Image& a, const Image& b) = 0;
  /// In [0,1]; 1 for identical inputs.
  virtual double feature_sim(const Image& a, const Image& b) = 0;
};

/// Copies `input` into `output` wherever `mask` is false.
void enforce_passthrough(const Image& input, const BinaryMask& mask, Image& output);

}  // namespace amodal
