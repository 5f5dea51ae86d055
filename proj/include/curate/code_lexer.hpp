#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "curate/code_rules.hpp"

namespace curate::code {

struct Segment {
    enum class Kind { Code, String, Comment };
    Kind kind;
    std::size_t begin;
    std::size_t end;
};

struct LexResult {
    std::vector<Segment> segments;
    bool unterminated_string = false;
    bool unterminated_block_comment = false;
    /// Offset of the first unterminated literal or comment, if any.
    std::size_t error_offset = 0;
};

/// Splits source into code, string-literal and comment segments. Segments are
/// contiguous and cover the whole input. A line comment stops before its newline.
LexResult lex(std::string_view source, const LanguageRuleSet& rules);

}  // namespace curate::code
