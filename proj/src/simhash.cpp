#include "curate/simhash.hpp"

#include <array>

#include "curate/text.hpp"

namespace curate::code {

std::uint64_t simhash64(std::string_view text) {
    std::array<long long, 64> votes{};
    bool any = false;
    for (auto word : text::split_words(text)) {
        any = true;
        const auto h = text::mix64(text::fnv1a64(word));
        for (int b = 0; b < 64; ++b) votes[b] += ((h >> b) & 1U) ? 1 : -1;
    }
    if (!any) return 0;
    std::uint64_t fp = 0;
    for (int b = 0; b < 64; ++b)
        if (votes[b] > 0) fp |= (std::uint64_t{1} << b);
    return fp;
}

}  // namespace curate::code
