#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "amodal/backends.hpp"

namespace amodal {

/// Canned responses keyed by `message_digest`.
///
/// Fixture file layout:
///   {"strict": true, "fallback": null, "responses": {"<sha256>": "<text>", ...}}
class MockReasoning final : public ReasoningBackend {
 public:
  MockReasoning() = default;
  /// Merges responses and settings from a fixture file.
  void load(const std::filesystem::path& path);

  void add(const std::string& digest, std::string response) { responses_[digest] = std::move(response); }
  void add(const ChatMessages& messages, std::string response) { add(message_digest(messages), std::move(response)); }
  void set_strict(bool strict) { strict_ = strict; }
  void set_fallback(std::optional<std::string> fallback) { fallback_ = std::move(fallback); }

  std::string chat(const ChatMessages& messages, const ChatOptions& options) override;
  std::size_t calls() const noexcept { return calls_.load(); }

  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> responses_;
  std::optional<std::string> fallback_;
  bool strict_ = true;
  std::atomic<std::size_t> calls_{0};
};

/// Segmentation from fixture masks or from color keys.
class MockSegmentation final : public SegmentationBackend {
 public:
  /// Chroma mode: pixels within Euclidean RGB distance `max_distance` of the label's color.
  static MockSegmentation chroma(std::map<std::string, Color> colors, double max_distance);
  /// Fixture mode: a stored mask per label.
  static MockSegmentation fixtures(std::map<std::string, BinaryMask> masks);

  Segmentation segment(const Image& image, const std::string& label) override;

 private:
  std::map<std::string, Color> colors_;
  std::map<std::string, BinaryMask> masks_;
  double max_distance_ = 0.0;
  bool chroma_ = true;
};

/// Fills masked pixels with a color hashed from the prompt. Attention is a
/// normalized distance transform of the filled region on the latent grid;
/// the self-refined map is its square root.
class MockInpainting final : public InpaintingBackend {
 public:
  InpaintOutput inpaint(const Image& image, const BinaryMask& mask, const std::string& prompt,
                        const InpaintParams& params) override;
  std::size_t calls() const noexcept { return calls_.load(); }

  static Color fill_color(const std::string& prompt);
  static AttentionBundle attention_for(const BinaryMask& mask);

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Closed-form stand-ins: lpips is mean absolute difference in [0,1],
/// feature_sim is 1 - lpips, clip is a fixed 0.25.
class MockMetrics final : public MetricBackend {
 public:
  double clip_score(const Image& image, const std::string& label) override;
  double lpips(const Image& a, const Image& b) override;
  double feature_sim(const Image& a, const Image& b) override;
};

}  // namespace amodal
