#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wander::encoding {

enum class Base64Alphabet { standard, url_safe };

/// Standard alphabet pads with '='; the URL-safe alphabet omits padding.
std::string base64_encode(std::span<const std::uint8_t> bytes,
                          Base64Alphabet alphabet = Base64Alphabet::standard);

/// Accepts either alphabet, padded or not. Throws std::invalid_argument on bad input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// IEEE-754 binary32, little-endian, regardless of host byte order.
std::vector<std::uint8_t> floats_to_le_bytes(std::span<const float> values);
std::vector<float> le_bytes_to_floats(std::span<const std::uint8_t> bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// 64-bit FNV-1a; used to turn text into seeds.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace wander::encoding
