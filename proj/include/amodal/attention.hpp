#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace amodal {

/// Aggregated attention on the latent grid, already averaged over the final
/// denoising steps and layers by the producer.
struct AttentionBundle {
  std::size_t latent_width = 0;
  std::size_t latent_height = 0;
  std::vector<float> cross;
  std::optional<std::vector<float>> self_refined;

  /// Flat zero cross map.
  static AttentionBundle zeros(std::size_t latent_width, std::size_t latent_height);

  /// Throws ProtocolError on length mismatch or values outside [0,1].
  void validate() const;
  friend bool operator==(const AttentionBundle&, const AttentionBundle&) = default;
};

/// ceil(dim / 8) per side.
inline std::size_t latent_dim(std::size_t pixels) { return (pixels + 7) / 8; }

/// `.attn` layout: one line of JSON header, then the raw little-endian float32
/// cross grid, then the self-refined grid when the header says it is present.
void save_attention(const AttentionBundle& b, const std::filesystem::path& path);
AttentionBundle load_attention(const std::filesystem::path& path);

}  // namespace amodal
