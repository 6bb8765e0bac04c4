#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lt3d {

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Strict RFC 4648 decoding (padding required, no whitespace). Throws
/// Error(kParse) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace lt3d
