#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "curate/code_rules.hpp"
#include "curate/document.hpp"

namespace curate::domain {

struct DensityBreakdown {
    std::size_t code_lines = 0;
    std::size_t prose_lines = 0;
    /// Lines emptied by comment removal plus boilerplate lines.
    std::size_t removed_lines = 0;
    /// code_lines / (code_lines + prose_lines), 0 when both are 0.
    double density = 0.0;
    /// Longest run of prose lines not interrupted by a code line. Blank lines do not break a run.
    std::size_t longest_prose_run = 0;
};

/// Lines that recur across many documents (navigation, generated headers).
/// Filled in a first pass over the corpus, then queried read-only.
class BoilerplateIndex {
public:
    explicit BoilerplateIndex(std::size_t min_documents = 5, std::size_t min_chars = 20);

    /// Counts each distinct trimmed line of the text once.
    void add_document(std::string_view text);
    bool contains(std::string_view trimmed_line) const;
    std::size_t size() const;

private:
    std::size_t min_documents_;
    std::size_t min_chars_;
    std::unordered_map<std::string, std::size_t> counts_;
};

/// Shebangs (first line only), license header lines and banner lines of one repeated punctuation character.
bool is_boilerplate_line(std::string_view trimmed_line, bool first_line);

/// Assignment, brace, semicolon, call or keyword-led statement signatures.
bool is_code_line(std::string_view trimmed_line);

DensityBreakdown code_density(std::string_view text, const code::LanguageRuleSet& rules,
                              const BoilerplateIndex* boilerplate = nullptr);

/// Pluggable language identification: true when the text is not in the primary language.
using LanguageHook = std::function<bool(std::string_view text)>;

struct DomainOptions {
    double density_threshold = 0.60;
    /// Code requires no prose run longer than this.
    std::size_t max_prose_run = 3;
    /// Fewer code lines than this and the document is not code-bearing.
    std::size_t min_code_lines = 2;
    LanguageHook language_hook;
    /// Fallback detector: share of non-ASCII letters above which text is multilingual.
    double max_non_ascii_letter_share = 0.30;
    /// Fallback detector: English trigram hit rate below which prose is multilingual.
    double min_trigram_hit_rate = 0.12;
    /// The trigram test only runs with at least this many letter trigrams.
    std::size_t min_trigrams = 50;
    const BoilerplateIndex* boilerplate = nullptr;
    /// Resolves language hints to comment conventions; generic rules when null or unresolved.
    const code::RuleRegistry* registry = nullptr;
};

/// Closed LaTeX math spans or display environments.
bool has_math_markers(std::string_view text);

/// Built-in fallback language check on prose.
bool looks_non_primary_language(std::string_view text, const DomainOptions& options = {});

DensityBreakdown document_density(const Document& doc, const DomainOptions& options = {});

/// Code iff repository provenance, density above the threshold and no long prose run; else CodeNL.
DomainLabel classify_code_family(const Document& doc, const DomainOptions& options = {});

/// Provenance first: Arxiv with math markers, WikiDump, Books, then language,
/// then code-bearing documents, else Web.
DomainLabel categorize_domain(const Document& doc, const DomainOptions& options = {});

}  // namespace curate::domain
