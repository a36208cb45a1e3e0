#include "amodal/backends.hpp"

#include "amodal/codec.hpp"
#include "amodal/error.hpp"

namespace amodal {

std::string message_digest(const ChatMessages& messages) {
  std::string buf;
  for (const auto& m : messages) {
    buf += m.role;
    buf += '\0';
    buf += m.text;
    buf += '\0';
    if (m.image) {
      buf += "img:" + std::to_string(m.image->width()) + "x" + std::to_string(m.image->height()) + "x" +
             std::to_string(m.image->channels()) + ":";
      const auto s = m.image->samples();
      buf.append(reinterpret_cast<const char*>(s.data()), s.size());
    }
    buf += '\x1e';
  }
  return sha256_hex(buf);
}

void enforce_passthrough(const Image& input, const BinaryMask& mask, Image& output) {
  if (!input.same_dims(mask) || !input.same_dims(output)) {
    throw DimensionError("enforce_passthrough: dims differ");
  }
  for (std::size_t y = 0; y < input.height(); ++y) {
    for (std::size_t x = 0; x < input.width(); ++x) {
      if (!mask.at(x, y)) output.set_color(x, y, input.color_at(x, y));
    }
  }
}

}  // namespace amodal
