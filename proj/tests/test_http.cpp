#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <thread>

#include "amodal/error.hpp"
#include "amodal/http_backends.hpp"
#include "amodal/mock_backends.hpp"
#include "amodal/wire.hpp"

using namespace amodal;
using nlohmann::json;

namespace {

// In-process stand-in for the model service on an ephemeral port.
class MockServer {
 public:
  MockServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& prefix = "") const { return "http://127.0.0.1:" + std::to_string(port_) + prefix; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpClientConfig fast(const std::string& url) {
  HttpClientConfig c;
  c.base_url = url;
  c.timeout_s = 2.0;
  c.max_attempts = 3;
  c.backoff_initial_s = 0.01;
  c.backoff_max_s = 0.02;
  return c;
}

void reply(httplib::Response& res, const json& j) { res.set_content(j.dump(), "application/json"); }

}  // namespace

TEST_CASE("retries 429 then succeeds") {
  MockServer s;
  std::atomic<int> hits{0};
  s.server().Post("/v1/segment", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 429;
      return;
    }
    const auto r = wire::decode_segment_request(json::parse(req.body));
    BinaryMask m(r.image.width(), r.image.height());
    m.set(1, 1);
    reply(res, wire::encode_segment_response({m, 0.5}));
  });
  HttpSegmentationClient client(fast(s.url("/v1/")));
  const auto seg = client.segment(Image::filled(4, 4, kWhite), "x");
  CHECK(hits == 2);
  CHECK(seg.mask.count() == 1);
  CHECK(seg.confidence == 0.5);
}

TEST_CASE("exhausted retries raise TransportError with the attempt count") {
  MockServer s;
  std::atomic<int> hits{0};
  s.server().Post("/segment", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  HttpSegmentationClient client(fast(s.url()));
  try {
    client.segment(Image::filled(4, 4, kWhite), "x");
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 3);
  }
  CHECK(hits == 3);
}

TEST_CASE("timeouts are retried and then reported") {
  MockServer s;
  std::atomic<int> hits{0};
  s.server().Post("/segment", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.status = 200;
  });
  auto cfg = fast(s.url());
  cfg.timeout_s = 0.1;
  cfg.max_attempts = 2;
  HttpSegmentationClient client(cfg);
  CHECK_THROWS_AS(client.segment(Image::filled(4, 4, kWhite), "x"), TransportError);
  CHECK(hits >= 1);
}

TEST_CASE("connection refused is a TransportError") {
  std::string url;
  {
    MockServer s;
    url = s.url();
  }
  auto cfg = fast(url);
  cfg.max_attempts = 2;
  HttpSegmentationClient client(cfg);
  CHECK_THROWS_AS(client.segment(Image::filled(4, 4, kWhite), "x"), TransportError);
}

TEST_CASE("401 raises AuthError without retry") {
  MockServer s;
  std::atomic<int> hits{0};
  std::string auth;
  s.server().Post("/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    auth = req.get_header_value("Authorization");
    res.status = 401;
  });
  ::setenv("AMODAL_TEST_TOKEN", "sekrit", 1);
  auto cfg = fast(s.url());
  cfg.token_env = "AMODAL_TEST_TOKEN";
  HttpReasoningClient client(cfg, "m");
  CHECK_THROWS_AS(client.chat({{"user", "hi", std::nullopt}}, {}), AuthError);
  CHECK(hits == 1);
  CHECK(auth == "Bearer sekrit");

  cfg.token_env = "AMODAL_TEST_TOKEN_UNSET";
  HttpReasoningClient missing(cfg, "m");
  CHECK_THROWS_AS(missing.chat({{"user", "hi", std::nullopt}}, {}), AuthError);
}

TEST_CASE("chat completions request and response shape") {
  MockServer s;
  json seen;
  s.server().Post("/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    reply(res, {{"choices", {{{"message", {{"role", "assistant"}, {"content", "{\"ok\": true}"}}}}}}});
  });
  HttpReasoningClient client(fast(s.url()), "gpt-test");
  ChatOptions opt;
  opt.seed = 5;
  const auto text = client.chat({{"system", "s", std::nullopt}, {"user", "u", Image::filled(2, 2, kWhite)}}, opt);
  CHECK(text == "{\"ok\": true}");
  CHECK(seen["model"] == "gpt-test");
  CHECK(seen["seed"] == 5);
  CHECK(seen["messages"][0]["content"] == "s");
  CHECK(seen["messages"][1]["content"][1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);
  CHECK_THROWS_AS(HttpReasoningClient::parse_response(json{{"choices", json::array()}}), ProtocolError);
}

TEST_CASE("inpaint round trip enforces pass-through") {
  MockServer s;
  s.server().Post("/inpaint", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = wire::decode_inpaint_request(json::parse(req.body));
    MockInpainting mock;
    auto out = mock.inpaint(r.image, r.mask, r.prompt, r.params);
    // A sloppy server that also touches unmasked pixels.
    out.image.set_color(0, 0, {1, 2, 3});
    reply(res, wire::encode_inpaint_response(out));
  });
  HttpInpaintingClient client(fast(s.url()));
  const auto img = Image::filled(64, 64, {50, 60, 70});
  BinaryMask mask(64, 64);
  for (std::size_t y = 20; y < 40; ++y)
    for (std::size_t x = 20; x < 40; ++x) mask.set(x, y);
  const auto out = client.inpaint(img, mask, "a ball", {});
  const Color fill = MockInpainting::fill_color("a ball");
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) CHECK(out.image.color_at(x, y) == (mask.at(x, y) ? fill : Color{50, 60, 70}));
  REQUIRE(out.attention.has_value());
  CHECK(out.attention->latent_width == 8);
  CHECK(*out.attention == MockInpainting::attention_for(mask));
}

TEST_CASE("protocol violations from the server") {
  MockServer s;
  s.server().Post("/inpaint", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = wire::decode_inpaint_request(json::parse(req.body));
    MockInpainting mock;
    auto j = wire::encode_inpaint_response(mock.inpaint(r.image, r.mask, r.prompt, r.params));
    if (r.prompt == "grid") j["attention"]["latent_h"] = 99;
    if (r.prompt == "b64") j["image_png_b64"] = "!!!";
    if (r.prompt == "json") {
      res.set_content("{oops", "application/json");
      return;
    }
    if (r.prompt == "400") {
      res.status = 400;
      return;
    }
    reply(res, j);
  });
  HttpInpaintingClient client(fast(s.url()));
  const auto img = Image::filled(16, 16, kWhite);
  const BinaryMask mask(16, 16, true);
  CHECK_THROWS_AS(client.inpaint(img, mask, "grid", {}), ProtocolError);
  CHECK_THROWS_AS(client.inpaint(img, mask, "b64", {}), ProtocolError);
  CHECK_THROWS_AS(client.inpaint(img, mask, "json", {}), ProtocolError);
  CHECK_THROWS_AS(client.inpaint(img, mask, "400", {}), ProtocolError);
  CHECK_NOTHROW(client.inpaint(img, mask, "fine", {}));
}

TEST_CASE("metric client") {
  MockServer s;
  s.server().Post("/metrics", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = wire::decode_metrics_request(json::parse(req.body));
    wire::MetricScores sc;
    if (r.label) sc.clip = 0.31;
    if (r.b) {
      sc.lpips = 0.1;
      sc.feature_sim = 0.8;
    }
    reply(res, wire::encode_metrics_response(sc));
  });
  HttpMetricClient client(fast(s.url()));
  const auto a = Image::filled(4, 4, kWhite);
  CHECK(client.clip_score(a, "cat") == 0.31);
  CHECK(client.lpips(a, a) == 0.1);
  CHECK(client.feature_sim(a, a) == 0.8);
}

TEST_CASE("transport configuration errors") {
  CHECK_THROWS_AS(JsonHttpTransport{fast("localhost:8000")}, ValidationError);
  auto cfg = fast("http://localhost:1");
  cfg.max_attempts = 0;
  CHECK_THROWS_AS(JsonHttpTransport{cfg}, ValidationError);
}
