#include "amodal/mock_backends.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "amodal/codec.hpp"
#include "amodal/error.hpp"

namespace amodal {

namespace {

std::string normalize_label(const std::string& label) {
  std::string out;
  for (char c : label) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto b = out.find_first_not_of(" \t\n");
  const auto e = out.find_last_not_of(" \t\n");
  return b == std::string::npos ? std::string() : out.substr(b, e - b + 1);
}

// Squared Euclidean distance transform of one line (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const std::size_t n = f.size();
  std::vector<std::size_t> v(n);
  std::vector<double> z(n + 1);
  std::size_t k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (std::size_t q = 1; q < n; ++q) {
    while (true) {
      const double vq = static_cast<double>(q), vk = static_cast<double>(v[k]);
      const double s = ((f[q] + vq * vq) - (f[v[k]] + vk * vk)) / (2.0 * vq - 2.0 * vk);
      if (s <= z[k]) {
        if (k == 0) {
          v[0] = q;
          z[1] = std::numeric_limits<double>::infinity();
          break;
        }
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = std::numeric_limits<double>::infinity();
      break;
    }
  }
  k = 0;
  d.assign(n, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

// --- MockReasoning --------------------------------------------------------

void MockReasoning::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FixtureError("reasoning fixtures " + path.string() + ": " + e.what());
  }
  strict_ = j.value("strict", true);
  if (j.contains("fallback") && j["fallback"].is_string()) fallback_ = j["fallback"].get<std::string>();
  const nlohmann::json responses = j.value("responses", nlohmann::json::object());
  for (const auto& [digest, text] : responses.items()) {
    if (!text.is_string()) throw FixtureError("reasoning fixtures " + path.string() + ": reply for " + digest + " is not a string");
    responses_[digest] = text.get<std::string>();
  }
}

std::string MockReasoning::chat(const ChatMessages& messages, const ChatOptions&) {
  ++calls_;
  const std::string digest = message_digest(messages);
  if (const auto it = responses_.find(digest); it != responses_.end()) return it->second;
  if (!strict_ && fallback_) return *fallback_;
  throw FixtureError("mock reasoning: no fixture for digest " + digest);
}

void MockReasoning::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["strict"] = strict_;
  j["fallback"] = fallback_ ? nlohmann::json(*fallback_) : nlohmann::json(nullptr);
  j["responses"] = responses_;
  write_file(path, j.dump(2) + "\n");
}

// --- MockSegmentation -----------------------------------------------------

MockSegmentation MockSegmentation::chroma(std::map<std::string, Color> colors, double max_distance) {
  MockSegmentation s;
  for (auto& [label, c] : colors) s.colors_[normalize_label(label)] = c;
  s.max_distance_ = max_distance;
  s.chroma_ = true;
  return s;
}

MockSegmentation MockSegmentation::fixtures(std::map<std::string, BinaryMask> masks) {
  MockSegmentation s;
  for (auto& [label, m] : masks) s.masks_.emplace(normalize_label(label), std::move(m));
  s.chroma_ = false;
  return s;
}

Segmentation MockSegmentation::segment(const Image& image, const std::string& label) {
  const std::string key = normalize_label(label);
  if (!chroma_) {
    const auto it = masks_.find(key);
    if (it == masks_.end()) throw FixtureError("mock segmentation: unknown label '" + label + "'");
    if (!image.same_dims(it->second)) throw DimensionError("mock segmentation: fixture mask dims differ from image");
    return {it->second, 1.0};
  }
  const auto it = colors_.find(key);
  if (it == colors_.end()) throw FixtureError("mock segmentation: unknown label '" + label + "'");
  const Color key_color = it->second;
  const double limit2 = max_distance_ * max_distance_;
  BinaryMask mask(image.width(), image.height());
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      const Color c = image.color_at(x, y);
      const double dr = double(c.r) - key_color.r, dg = double(c.g) - key_color.g, db = double(c.b) - key_color.b;
      if (dr * dr + dg * dg + db * db <= limit2) mask.set(x, y);
    }
  }
  return {mask, 1.0};
}

// --- MockInpainting -------------------------------------------------------

Color MockInpainting::fill_color(const std::string& prompt) {
  const std::string h = sha256_hex(prompt);
  auto byte = [&](std::size_t i) { return static_cast<std::uint8_t>(std::stoi(h.substr(2 * i, 2), nullptr, 16)); };
  return {byte(0), byte(1), byte(2)};
}

AttentionBundle MockInpainting::attention_for(const BinaryMask& mask) {
  const std::size_t lw = latent_dim(mask.width()), lh = latent_dim(mask.height());
  AttentionBundle b = AttentionBundle::zeros(lw, lh);
  if (mask.empty()) return b;

  // A latent cell belongs to the region when any pixel of its 8x8 block is masked.
  // The grid is padded by one background cell so the frame counts as outside.
  const std::size_t pw = lw + 2, ph = lh + 2;
  constexpr double kInf = 1e18;
  std::vector<double> grid(pw * ph, 0.0);
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) grid[(y / 8 + 1) * pw + (x / 8 + 1)] = kInf;
    }
  }
  std::vector<double> f, d;
  for (std::size_t x = 0; x < pw; ++x) {
    f.resize(ph);
    for (std::size_t y = 0; y < ph; ++y) f[y] = grid[y * pw + x];
    edt_1d(f, d);
    for (std::size_t y = 0; y < ph; ++y) grid[y * pw + x] = d[y];
  }
  for (std::size_t y = 0; y < ph; ++y) {
    f.assign(grid.begin() + static_cast<std::ptrdiff_t>(y * pw), grid.begin() + static_cast<std::ptrdiff_t>((y + 1) * pw));
    edt_1d(f, d);
    std::copy(d.begin(), d.end(), grid.begin() + static_cast<std::ptrdiff_t>(y * pw));
  }
  double max_d = 0.0;
  for (std::size_t y = 0; y < lh; ++y) {
    for (std::size_t x = 0; x < lw; ++x) max_d = std::max(max_d, std::sqrt(grid[(y + 1) * pw + x + 1]));
  }
  std::vector<float> self(lw * lh);
  for (std::size_t y = 0; y < lh; ++y) {
    for (std::size_t x = 0; x < lw; ++x) {
      const double v = std::sqrt(grid[(y + 1) * pw + x + 1]) / max_d;
      b.cross[y * lw + x] = static_cast<float>(v);
      self[y * lw + x] = static_cast<float>(std::sqrt(v));
    }
  }
  b.self_refined = std::move(self);
  return b;
}

InpaintOutput MockInpainting::inpaint(const Image& image, const BinaryMask& mask, const std::string& prompt,
                                      const InpaintParams& params) {
  ++calls_;
  if (!image.same_dims(mask)) throw DimensionError("mock inpainting: image and mask dims differ");
  InpaintOutput out{to_rgb(image), std::nullopt};
  const Color fill = fill_color(prompt);
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      if (mask.at(x, y)) out.image.set_color(x, y, fill);
    }
  }
  if (params.want_attention) out.attention = attention_for(mask);
  return out;
}

// --- MockMetrics ----------------------------------------------------------

double MockMetrics::clip_score(const Image&, const std::string&) { return 0.25; }

double MockMetrics::lpips(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw DimensionError("mock lpips: dims differ");
  const Image ra = to_rgb(a), rb = to_rgb(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < ra.samples().size(); ++i) {
    sum += std::abs(double(ra.samples()[i]) - double(rb.samples()[i]));
  }
  return sum / (255.0 * static_cast<double>(ra.samples().size()));
}

double MockMetrics::feature_sim(const Image& a, const Image& b) { return 1.0 - lpips(a, b); }

}  // namespace amodal
