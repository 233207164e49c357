#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairex {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteSpan b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(ByteSpan data);

// Throws std::invalid_argument on odd length or non-hex characters.
Bytes hex_decode(std::string_view hex);

template <std::size_t N>
std::string hex_encode(const std::array<std::uint8_t, N>& a) {
    return hex_encode(ByteSpan(a.data(), a.size()));
}

} // namespace fairex
