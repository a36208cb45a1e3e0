#pragma once

#include <nlohmann/json.hpp>

#include <memory>
#include <semaphore>
#include <string>

#include "amodal/backends.hpp"

namespace amodal {

struct HttpClientConfig {
  /// scheme://host[:port][/prefix], e.g. "https://api.openai.com/v1".
  std::string base_url;
  /// Environment variable holding the bearer token; empty disables auth.
  std::string token_env;
  double timeout_s = 60.0;
  int max_attempts = 4;
  double backoff_initial_s = 0.5;
  double backoff_max_s = 8.0;
  std::size_t max_in_flight = 4;
};

/// JSON POST with bounded concurrency and exponential-backoff retries on
/// transport failures, 429 and 5xx. 401/403 raise AuthError immediately.
class JsonHttpTransport {
 public:
  explicit JsonHttpTransport(HttpClientConfig cfg);
  ~JsonHttpTransport();

  nlohmann::json post(const std::string& path, const nlohmann::json& body);
  const HttpClientConfig& config() const noexcept { return cfg_; }

 private:
  HttpClientConfig cfg_;
  std::string origin_;
  std::string prefix_;
  std::counting_semaphore<1024> in_flight_;
};

/// OpenAI-compatible chat completions with images embedded as PNG data URLs.
class HttpReasoningClient final : public ReasoningBackend {
 public:
  HttpReasoningClient(HttpClientConfig cfg, std::string model);
  std::string chat(const ChatMessages& messages, const ChatOptions& options) override;

  static nlohmann::json build_request(const ChatMessages& messages, const ChatOptions& options,
                                      const std::string& model);
  /// choices[0].message.content; ProtocolError otherwise.
  static std::string parse_response(const nlohmann::json& body);

 private:
  JsonHttpTransport transport_;
  std::string model_;
};

class HttpSegmentationClient final : public SegmentationBackend {
 public:
  explicit HttpSegmentationClient(HttpClientConfig cfg) : transport_(std::move(cfg)) {}
  Segmentation segment(const Image& image, const std::string& label) override;

 private:
  JsonHttpTransport transport_;
};

/// Overwrites mask-false pixels with the input after decoding, whatever the server sent.
class HttpInpaintingClient final : public InpaintingBackend {
 public:
  explicit HttpInpaintingClient(HttpClientConfig cfg) : transport_(std::move(cfg)) {}
  InpaintOutput inpaint(const Image& image, const BinaryMask& mask, const std::string& prompt,
                        const InpaintParams& params) override;

 private:
  JsonHttpTransport transport_;
};

class HttpMetricClient final : public MetricBackend {
 public:
  explicit HttpMetricClient(HttpClientConfig cfg) : transport_(std::move(cfg)) {}
  double clip_score(const Image& image, const std::string& label) override;
  double lpips(const Image& a, const Image& b) override;
  double feature_sim(const Image& a, const Image& b) override;

 private:
  JsonHttpTransport transport_;
};

}  // namespace amodal
