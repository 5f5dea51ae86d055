#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/code_rules.hpp"
#include "curate/dedup_index.hpp"
#include "curate/document.hpp"

namespace curate::code {

/// Rule identifiers, in pipeline order.
namespace rule {
inline constexpr std::string_view kLongLine = "long_line";
inline constexpr std::string_view kFileLength = "file_length";
inline constexpr std::string_view kSyntax = "syntax";
inline constexpr std::string_view kFormat = "format";
inline constexpr std::string_view kBadPattern = "bad_pattern";
inline constexpr std::string_view kSignalDensity = "signal_density";
inline constexpr std::string_view kDuplicate = "duplicate";
inline constexpr std::string_view kNearDuplicate = "near_duplicate";
inline constexpr std::string_view kUnknownLanguage = "unknown_language";
}  // namespace rule

struct Verdict {
    bool pass = true;
    std::optional<double> measured;
};

/// Removes comments; newlines inside block comments are kept so line structure
/// survives. String literals are never scanned for markers. An unterminated
/// block comment is removed to end of text and a warning is appended.
std::string strip_comments(std::string_view text, const LanguageRuleSet& rules,
                           std::vector<std::string>* warnings = nullptr);

/// Fails iff some physical line is longer than max_line_chars code points.
Verdict long_line_filter(std::string_view text, const LanguageRuleSet& rules);

/// Fails iff the whitespace token count is < min_tokens or > max_tokens.
Verdict file_length_filter(std::string_view text, const LanguageRuleSet& rules);

/// Built-in syntax check: (), [], {} balanced and nested outside literals and
/// comments, and every literal terminated.
Verdict check_syntax(std::string_view text, const LanguageRuleSet& rules);

/// Layout sanity: no line mixes tabs and spaces in its indentation; for
/// indentation-sensitive languages, one indentation style per file and every
/// statement-level indent a multiple of the detected unit.
Verdict check_format(std::string_view text, const LanguageRuleSet& rules);

Verdict bad_pattern_filter(std::string_view doc_id, std::string_view text, const LanguageRuleSet& rules);

/// True when a comment-free, trimmed, non-empty line counts as executable code.
bool is_executable_line(std::string_view trimmed_line, const LanguageRuleSet& rules);

struct DensityCounts {
    std::size_t executable = 0;
    std::size_t non_empty = 0;
    double density() const {
        return non_empty == 0 ? 0.0 : static_cast<double>(executable) / static_cast<double>(non_empty);
    }
};

DensityCounts signal_density_counts(std::string_view text, const LanguageRuleSet& rules);

/// Executable lines / non-empty lines after comment removal; 0 for no lines.
double signal_density(std::string_view text, const LanguageRuleSet& rules);

/// Canonical token stream: identifiers become VAR_k in first-occurrence order,
/// numeric and string constants become CONST, comments vanish, keywords stay,
/// tokens joined by single spaces. Idempotent.
std::string normalize_for_dedup(std::string_view function_text, const LanguageRuleSet& rules);

std::uint64_t normalized_fingerprint(std::string_view normalized);

/// An external validator returns a pass/fail verdict for the text.
using ExternalCheck = std::function<bool(std::string_view text, const LanguageRuleSet& rules)>;

struct PipelineOptions {
    /// Per-language replacements for the built-in syntax check.
    std::map<std::string, ExternalCheck> syntax_hooks;
    /// Per-language replacements for the built-in format check.
    std::map<std::string, ExternalCheck> format_hooks;
};

/// Outcome of the stateless rule stages, before deduplication.
struct RuleOutcome {
    FilterReport report;
    /// Set only when every rule passed.
    std::optional<std::uint64_t> fingerprint;
    std::optional<std::uint64_t> simhash;
};

/// Runs long-line, file-length, syntax, format, bad-pattern and signal-density
/// rules in that order, stopping at the first failure. Pure; safe to run concurrently.
RuleOutcome evaluate_rules(const Document& doc, const LanguageRuleSet& rules, const PipelineOptions& options = {});

/// Applies the dedup stage to a rule outcome and registers survivors in the index.
FilterReport apply_dedup(RuleOutcome outcome, DedupIndex& index);

FilterReport run_code_pipeline(const Document& doc, const LanguageRuleSet& rules, DedupIndex& index,
                               const PipelineOptions& options = {});

/// Resolves doc.language_hint first; unresolvable hints produce a discard with
/// reason unknown_language.
FilterReport run_code_pipeline(const Document& doc, const RuleRegistry& registry, DedupIndex& index,
                               const PipelineOptions& options = {});

FilterReport unknown_language_report(const Document& doc);

}  // namespace curate::code
