#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace curate::rng {

/// Seed for a named substream of a run seed. Every random draw in the toolkit
/// comes from one of these so module tests and end-to-end runs agree.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

inline std::mt19937_64 engine(std::uint64_t seed, std::string_view name) {
    return std::mt19937_64(substream_seed(seed, name));
}

inline std::mt19937_64 engine(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    return std::mt19937_64(substream_seed(seed, name, index));
}

/// Uniform double in (0, 1); never returns 0.
double open_unit(std::mt19937_64& gen);

}  // namespace curate::rng
