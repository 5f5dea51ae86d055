#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace curate::code {

struct BlockComment {
    std::string open;
    std::string close;
};

/// Per-language thresholds and lexical conventions for the code cleaning rules.
struct LanguageRuleSet {
    std::string language;
    std::size_t max_line_chars = 150;
    std::size_t min_tokens = 10;
    std::size_t max_tokens = 10000;
    std::vector<std::string> line_comments;
    std::vector<BlockComment> block_comments;
    /// Single-line string delimiters.
    std::string quote_chars = "\"'";
    /// Delimiters whose literals may span lines (JS template strings).
    std::string multiline_quote_chars;
    bool triple_quoted_strings = false;
    /// A quote between two digits is a digit separator (C++14 1'000).
    bool digit_separator_quote = false;
    /// Indentation carries syntax; enables the indentation-unit format check.
    bool indent_sensitive = false;
    std::vector<std::string> bad_patterns;
    std::vector<std::string> keywords;
    /// Trimmed lines starting with one of these are not executable (imports, includes, annotations).
    std::vector<std::string> non_executable_prefixes;
    double min_signal_density = 0.30;
    /// Tolerate long lines that break at whitespace into chunks within the limit. Off by default.
    bool soft_wrap_detection = false;

    /// Throws ConfigError when min_tokens >= max_tokens or max_line_chars == 0.
    void validate() const;
};

LanguageRuleSet python_rules();
LanguageRuleSet javascript_rules();
LanguageRuleSet java_rules();
LanguageRuleSet cpp_rules();
/// Language-neutral conventions (// and /* */ comments) used when no hint is available.
LanguageRuleSet generic_rules();

/// Rule sets keyed by canonical language name, with hint aliases ("py", "c++", "js", ...).
class RuleRegistry {
public:
    /// Python, JavaScript, Java and C++ with the published thresholds.
    static RuleRegistry defaults();

    /// Overrides from a JSON object keyed by language name. Known languages are
    /// patched field-by-field; unknown ones start from generic_rules().
    void merge_json(std::string_view json_text);
    void merge_file(const std::string& path);

    void add(LanguageRuleSet rules, const std::vector<std::string>& aliases = {});

    /// nullptr when the hint names no known language.
    const LanguageRuleSet* resolve(std::string_view hint) const;

    std::vector<std::string> languages() const;

private:
    std::map<std::string, LanguageRuleSet> rules_;
    std::map<std::string, std::string> aliases_;
};

}  // namespace curate::code
