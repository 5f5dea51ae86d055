#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace curate::text {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

/// Splits on '\n'; a trailing '\r' is kept. An empty input yields one empty line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Maximal non-whitespace runs.
std::vector<std::string_view> split_words(std::string_view s);

std::string_view trim(std::string_view s);

bool is_blank(std::string_view s);

/// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s);

/// Decodes the code point starting at s[i]; advances i. Invalid bytes decode as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i);

bool starts_with_word(std::string_view line, std::string_view word);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint32_t fnv1a32(std::string_view s, std::uint32_t seed = 2166136261u);

/// splitmix64 finalizer; used to spread short-string hashes over all 64 bits.
std::uint64_t mix64(std::uint64_t x);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace curate::text
