#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace curate::code {

/// 64-bit SimHash over whitespace-delimited word tokens with unit weights.
/// Empty (or all-whitespace) text maps to 0.
std::uint64_t simhash64(std::string_view text);

inline unsigned hamming_distance(std::uint64_t a, std::uint64_t b) {
    return static_cast<unsigned>(std::popcount(a ^ b));
}

}  // namespace curate::code
