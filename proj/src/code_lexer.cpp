#include "curate/code_lexer.hpp"

#include <algorithm>

#include "curate/text.hpp"

namespace curate::code {

namespace {

bool at(std::string_view s, std::size_t i, std::string_view token) {
    return s.compare(i, token.size(), token) == 0;
}

}  // namespace

LexResult lex(std::string_view src, const LanguageRuleSet& rules) {
    LexResult out;
    auto emit = [&](Segment::Kind kind, std::size_t b, std::size_t e) {
        if (e <= b) return;
        if (!out.segments.empty() && out.segments.back().kind == kind && out.segments.back().end == b) {
            out.segments.back().end = e;
            return;
        }
        out.segments.push_back({kind, b, e});
    };
    auto flag = [&](bool& which, std::size_t offset) {
        if (!out.unterminated_string && !out.unterminated_block_comment) out.error_offset = offset;
        which = true;
    };

    std::size_t code_start = 0;
    std::size_t i = 0;
    const std::size_t n = src.size();
    while (i < n) {
        // line comments
        bool matched = false;
        for (const auto& marker : rules.line_comments) {
            if (at(src, i, marker)) {
                emit(Segment::Kind::Code, code_start, i);
                auto nl = src.find('\n', i);
                if (nl == std::string_view::npos) nl = n;
                emit(Segment::Kind::Comment, i, nl);
                i = code_start = nl;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        for (const auto& block : rules.block_comments) {
            if (at(src, i, block.open)) {
                emit(Segment::Kind::Code, code_start, i);
                auto close = src.find(block.close, i + block.open.size());
                std::size_t end = n;
                if (close == std::string_view::npos)
                    flag(out.unterminated_block_comment, i);
                else
                    end = close + block.close.size();
                emit(Segment::Kind::Comment, i, end);
                i = code_start = end;
                matched = true;
                break;
            }
        }
        if (matched) continue;

        const char c = src[i];
        if (rules.triple_quoted_strings && (at(src, i, "\"\"\"") || at(src, i, "'''"))) {
            emit(Segment::Kind::Code, code_start, i);
            const std::string_view delim = src.substr(i, 3);
            std::size_t j = i + 3;
            std::size_t end = n;
            bool closed = false;
            while (j < n) {
                if (src[j] == '\\') {
                    j += 2;
                    continue;
                }
                if (at(src, j, delim)) {
                    end = j + 3;
                    closed = true;
                    break;
                }
                ++j;
            }
            if (!closed) flag(out.unterminated_string, i);
            emit(Segment::Kind::String, i, end);
            i = code_start = end;
            continue;
        }
        const bool single = rules.quote_chars.find(c) != std::string::npos;
        const bool multi = rules.multiline_quote_chars.find(c) != std::string::npos;
        if (single || multi) {
            if (rules.digit_separator_quote && c == '\'' && i > 0 && i + 1 < n && text::is_digit(src[i - 1]) &&
                text::is_ident_char(src[i + 1])) {
                ++i;
                continue;
            }
            emit(Segment::Kind::Code, code_start, i);
            std::size_t j = i + 1;
            std::size_t end = n;
            bool closed = false;
            while (j < n) {
                const char d = src[j];
                if (d == '\\') {
                    j += 2;
                    continue;
                }
                if (d == c) {
                    end = j + 1;
                    closed = true;
                    break;
                }
                if (d == '\n' && !multi) {
                    end = j;
                    break;
                }
                ++j;
            }
            if (!closed) flag(out.unterminated_string, i);
            end = std::min(end, n);
            emit(Segment::Kind::String, i, end);
            i = code_start = end;
            continue;
        }
        ++i;
    }
    emit(Segment::Kind::Code, code_start, n);
    return out;
}

}  // namespace curate::code
