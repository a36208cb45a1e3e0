#include "amodal/attention.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "amodal/codec.hpp"
#include "amodal/error.hpp"

namespace amodal {

AttentionBundle AttentionBundle::zeros(std::size_t latent_width, std::size_t latent_height) {
  AttentionBundle b;
  b.latent_width = latent_width;
  b.latent_height = latent_height;
  b.cross.assign(latent_width * latent_height, 0.0f);
  return b;
}

void AttentionBundle::validate() const {
  const std::size_t n = latent_width * latent_height;
  if (n == 0) throw ProtocolError("attention: zero latent dimension");
  auto check = [n](const std::vector<float>& grid, const char* name) {
    if (grid.size() != n) {
      throw ProtocolError(std::string("attention: ") + name + " length " + std::to_string(grid.size()) +
                          " != latent_w*latent_h " + std::to_string(n));
    }
    for (float v : grid) {
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
        throw ProtocolError(std::string("attention: ") + name + " value outside [0,1]");
      }
    }
  };
  check(cross, "cross");
  if (self_refined) check(*self_refined, "self_refined");
}

void save_attention(const AttentionBundle& b, const std::filesystem::path& path) {
  b.validate();
  nlohmann::json header = {{"format", "f32le"},
                           {"latent_w", b.latent_width},
                           {"latent_h", b.latent_height},
                           {"self_refined", b.self_refined.has_value()}};
  std::string out = header.dump() + "\n";
  out += pack_f32le(b.cross);
  if (b.self_refined) out += pack_f32le(*b.self_refined);
  write_file(path, out);
}

AttentionBundle load_attention(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  const auto nl = raw.find('\n');
  if (nl == std::string::npos) throw ProtocolError("attn file: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("attn file: bad header: ") + e.what());
  }
  if (header.value("format", "") != "f32le") throw ProtocolError("attn file: unsupported format");
  AttentionBundle b;
  b.latent_width = header.at("latent_w").get<std::size_t>();
  b.latent_height = header.at("latent_h").get<std::size_t>();
  const bool has_self = header.value("self_refined", false);
  const std::size_t grid_bytes = b.latent_width * b.latent_height * 4;
  const std::string_view blob = std::string_view(raw).substr(nl + 1);
  if (blob.size() != grid_bytes * (has_self ? 2 : 1)) throw ProtocolError("attn file: blob length mismatch");
  b.cross = unpack_f32le(blob.substr(0, grid_bytes));
  if (has_self) b.self_refined = unpack_f32le(blob.substr(grid_bytes));
  b.validate();
  return b;
}

}  // namespace amodal
