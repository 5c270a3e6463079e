#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace droidaudit {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Little-endian load. Caller guarantees offset + sizeof(T) <= bytes.size().
template <typename T>
T load_le(ByteView bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  }
  T out;
  if constexpr (sizeof(T) == 8) {
    std::memcpy(&out, &v, 8);
  } else {
    auto narrow = static_cast<std::uint32_t>(v);
    if constexpr (sizeof(T) == 4) {
      std::memcpy(&out, &narrow, 4);
    } else {
      out = static_cast<T>(v);
    }
  }
  return out;
}

template <typename T>
void store_le(Bytes& out, T value) {
  std::uint64_t v = 0;
  if constexpr (sizeof(T) == 8) {
    std::memcpy(&v, &value, 8);
  } else if constexpr (sizeof(T) == 4) {
    std::uint32_t narrow;
    std::memcpy(&narrow, &value, 4);
    v = narrow;
  } else {
    v = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

std::string to_hex(ByteView bytes);

// Accepts upper/lower case and ignores whitespace; nullopt on odd length or bad digit.
std::optional<Bytes> from_hex(std::string_view text);

}  // namespace droidaudit
