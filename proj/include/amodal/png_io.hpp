#pragma once

#include <filesystem>
#include <string>

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

/// Decodes to 3-channel RGB, or 4-channel when `keep_alpha` and the file carries alpha.
/// 16-bit inputs are reduced to 8 bits.
Image decode_png(const std::string& bytes, bool keep_alpha = false);
std::string encode_png(const Image& img);

Image load_png(const std::filesystem::path& path, bool keep_alpha = false);
void save_png(const Image& img, const std::filesystem::path& path);

/// Any nonzero gray value loads as set.
BinaryMask decode_mask_png(const std::string& bytes);
/// Single-channel, 0 or 255.
std::string encode_mask_png(const BinaryMask& m);
BinaryMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const BinaryMask& m, const std::filesystem::path& path);

Image mask_to_gray(const BinaryMask& m);

}  // namespace amodal
