#include "amodal/http_backends.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "amodal/codec.hpp"
#include "amodal/error.hpp"
#include "amodal/png_io.hpp"
#include "amodal/wire.hpp"

namespace amodal {

using nlohmann::json;

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

JsonHttpTransport::JsonHttpTransport(HttpClientConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cfg_.max_in_flight, 1, 1024))) {
  const auto scheme_end = cfg_.base_url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("http endpoint needs a scheme: " + cfg_.base_url);
  const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
  origin_ = cfg_.base_url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (cfg_.max_attempts < 1) throw ValidationError("http max_attempts must be >= 1");
}

JsonHttpTransport::~JsonHttpTransport() = default;

json JsonHttpTransport::post(const std::string& path, const json& body) {
  SlotGuard slot(in_flight_);
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(cfg_.timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!cfg_.token_env.empty()) {
    const char* token = std::getenv(cfg_.token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw AuthError("environment variable " + cfg_.token_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const std::string payload = body.dump();
  const std::string url = prefix_ + path;
  std::string last_error;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double delay =
          std::min(cfg_.backoff_max_s, cfg_.backoff_initial_s * std::pow(2.0, static_cast<double>(attempt - 2)));
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    auto res = client.Post(url, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("POST " + url + " rejected with HTTP " + std::to_string(res->status));
    }
    if (retryable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError("POST " + url + " returned HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 160));
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception&) {
      throw ProtocolError("POST " + url + ": malformed JSON body: " + res->body.substr(0, 160));
    }
  }
  throw TransportError("POST " + url + " failed after " + std::to_string(cfg_.max_attempts) +
                           " attempts (" + last_error + ")",
                       cfg_.max_attempts);
}

// --- reasoning ------------------------------------------------------------

HttpReasoningClient::HttpReasoningClient(HttpClientConfig cfg, std::string model)
    : transport_(std::move(cfg)), model_(std::move(model)) {}

json HttpReasoningClient::build_request(const ChatMessages& messages, const ChatOptions& options,
                                        const std::string& model) {
  json msgs = json::array();
  for (const auto& m : messages) {
    if (!m.image) {
      msgs.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", m.text}});
    parts.push_back({{"type", "image_url"},
                     {"image_url", {{"url", "data:image/png;base64," + base64_encode(encode_png(*m.image))}}}});
    msgs.push_back({{"role", m.role}, {"content", std::move(parts)}});
  }
  json req = {{"model", model}, {"messages", std::move(msgs)}, {"temperature", options.temperature}};
  if (options.seed) req["seed"] = *options.seed;
  return req;
}

std::string HttpReasoningClient::parse_response(const json& body) {
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const json& choice = body["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      return choice["message"]["content"].get<std::string>();
    }
  }
  throw ProtocolError("chat completion without choices[0].message.content: " + wire::excerpt(body));
}

std::string HttpReasoningClient::chat(const ChatMessages& messages, const ChatOptions& options) {
  return parse_response(transport_.post("/chat/completions", build_request(messages, options, model_)));
}

// --- model service --------------------------------------------------------

Segmentation HttpSegmentationClient::segment(const Image& image, const std::string& label) {
  const json res = transport_.post("/segment", wire::encode_segment_request(image, label));
  return wire::decode_segment_response(res, image.width(), image.height());
}

InpaintOutput HttpInpaintingClient::inpaint(const Image& image, const BinaryMask& mask, const std::string& prompt,
                                            const InpaintParams& params) {
  if (!image.same_dims(mask)) throw DimensionError("inpaint: image and mask dims differ");
  const json res = transport_.post("/inpaint", wire::encode_inpaint_request(image, mask, prompt, params));
  InpaintOutput out = wire::decode_inpaint_response(res, image.width(), image.height(), params.want_attention);
  enforce_passthrough(to_rgb(image), mask, out.image);
  return out;
}

namespace {

double require_score(const std::optional<double>& v, const char* name, const json& res) {
  if (!v) throw ProtocolError(std::string("metrics: response lacks '") + name + "': " + wire::excerpt(res));
  return *v;
}

}  // namespace

double HttpMetricClient::clip_score(const Image& image, const std::string& label) {
  const json res = transport_.post("/metrics", wire::encode_metrics_request(image, nullptr, &label));
  return require_score(wire::decode_metrics_response(res).clip, "clip", res);
}

double HttpMetricClient::lpips(const Image& a, const Image& b) {
  const json res = transport_.post("/metrics", wire::encode_metrics_request(a, &b, nullptr));
  return require_score(wire::decode_metrics_response(res).lpips, "lpips", res);
}

double HttpMetricClient::feature_sim(const Image& a, const Image& b) {
  const json res = transport_.post("/metrics", wire::encode_metrics_request(a, &b, nullptr));
  return require_score(wire::decode_metrics_response(res).feature_sim, "feature_sim", res);
}

}  // namespace amodal
