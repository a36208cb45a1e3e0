#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amodal {

std::string base64_encode(std::string_view bytes);
/// Throws ProtocolError on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

std::string sha256_hex(std::string_view bytes);

/// Little-endian float32 packing used by the attention wire format and `.attn` files.
std::string pack_f32le(std::span<const float> values);
std::vector<float> unpack_f32le(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace amodal
