#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cse::base64 {

std::string encode(std::span<const std::uint8_t> bytes);

// Throws cse::Error(format) on malformed input.
std::vector<std::uint8_t> decode(std::string_view text);

}  // namespace cse::base64
