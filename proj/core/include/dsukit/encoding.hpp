#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsukit/errors.hpp"

namespace dsukit {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const std::uint8_t> b) {
  return std::string(b.begin(), b.end());
}

namespace encoding {

// base64url without padding. Decoding is strict: non-alphabet characters,
// impossible lengths, and non-zero unused trailing bits are all rejected, so
// every byte string has exactly one accepted encoding.
std::string b64url_encode(std::span<const std::uint8_t> data);
Result<Bytes> b64url_decode(std::string_view text);

// lowercase hex
std::string hex_encode(std::span<const std::uint8_t> data);
Result<Bytes> hex_decode(std::string_view text);

}  // namespace encoding
}  // namespace dsukit
