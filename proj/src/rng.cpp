#include "curate/rng.hpp"

#include "curate/text.hpp"

namespace curate::rng {

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
    return text::mix64(text::mix64(seed) ^ text::fnv1a64(name));
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    return text::mix64(substream_seed(seed, name) ^ text::mix64(index + 0x632be59bd9b4e019ULL));
}

double open_unit(std::mt19937_64& gen) {
    // 53 random bits, shifted off zero
    return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace curate::rng
