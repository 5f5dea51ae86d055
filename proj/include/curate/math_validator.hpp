#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace curate::math {

enum class MathCheck { LatexSyntax, WellFormed, Consistency, Noise };

std::string_view to_string(MathCheck c);

struct MathIssue {
    MathCheck check;
    std::string code;
    /// Byte offset into the validated text.
    std::size_t location;

    bool operator==(const MathIssue&) const = default;
};

enum class MathDecision { Retain, Remove };

struct MathVerdict {
    std::vector<MathIssue> issues;
    /// Sorted, without repeats.
    std::vector<MathCheck> failed_checks;
    MathDecision decision = MathDecision::Retain;
};

struct MathOptions {
    /// Commands accepted in addition to the built-in list.
    std::vector<std::string> extra_commands;
    /// Literal placeholder markers; each occurrence is an issue.
    std::vector<std::string> placeholder_markers = {"TODO", "FIXME"};
    /// Runs of this many '?' or U+2026 characters count as placeholders.
    std::size_t placeholder_run = 3;
    double max_formula_ratio = 0.80;
    /// Off by default: flags single-letter variables that occur exactly once.
    bool variable_heuristic = false;
    std::size_t min_failed_checks = 2;
};

enum class SpanKind { Inline, Display, Environment };

/// One math region. [open, content_begin) and [content_end, close_end) are delimiters.
struct MathSpan {
    SpanKind kind;
    std::size_t open;
    std::size_t content_begin;
    std::size_t content_end;
    std::size_t close_end;
    bool closed;
    std::string environment;

    bool display() const { return kind != SpanKind::Inline; }
};

/// Math spans delimited by $, $$, \( \), \[ \] and display environments.
/// Inline and $$ spans do not cross a blank line. Escaped \$ is text.
std::vector<MathSpan> find_math_spans(std::string_view text);

/// Built-in list of recognized math-mode commands (without backslash).
const std::vector<std::string>& known_commands();

std::vector<MathIssue> check_latex_syntax(std::string_view text);
std::vector<MathIssue> check_wellformedness(std::string_view text, const MathOptions& options = {});
std::vector<MathIssue> check_consistency(std::string_view text, const MathOptions& options = {});
std::vector<MathIssue> check_noise(std::string_view text, const MathOptions& options = {});

/// Non-whitespace characters inside math content over all non-whitespace
/// characters outside delimiters. 0 for whitespace-only text.
double formula_ratio(std::string_view text);

/// Runs all four checks; a check fails when it reports at least one issue, and
/// the text is removed when min_failed_checks (default 2) checks fail.
MathVerdict validate_math(std::string_view text, const MathOptions& options = {});

}  // namespace curate::math
