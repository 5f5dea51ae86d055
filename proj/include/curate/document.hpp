#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace curate {

enum class Provenance { Repository, Web, Arxiv, Books, WikiDump, Synthetic, Unknown };

/// The seven-domain taxonomy. Exactly one label per classified document.
enum class DomainLabel { Web, Code, CodeNL, Math, Wikipedia, Books, Multilingual };

inline constexpr DomainLabel kAllDomains[] = {
    DomainLabel::Web,       DomainLabel::Code,  DomainLabel::CodeNL,      DomainLabel::Math,
    DomainLabel::Wikipedia, DomainLabel::Books, DomainLabel::Multilingual,
};

std::string_view to_string(Provenance p);
std::string_view to_string(DomainLabel d);
/// Case-insensitive; throws ParseError on unknown names.
Provenance parse_provenance(std::string_view s);
DomainLabel parse_domain(std::string_view s);

struct Document {
    std::string id;
    std::string text;
    Provenance provenance = Provenance::Unknown;
    std::optional<std::string> language_hint;
    std::optional<DomainLabel> domain;
    std::optional<double> quality_score;
    /// Binary training label ("structured"/"unstructured"); only labeled corpora carry it.
    std::optional<bool> structured;
};

/// Decodes one JSON-lines record. Throws ParseError (syntax, UTF-8, field types)
/// or SchemaError (missing id/text, quality_score outside [0,1]).
Document parse_document_line(std::string_view line);

/// Inverse of parse_document_line for every populated field; keys in fixed order.
std::string serialize_document(const Document& doc);

/// Number of maximal non-whitespace runs.
std::size_t count_tokens(std::string_view text);

struct RuleVerdict {
    std::string rule_id;
    bool pass = true;
    std::optional<double> measured;
};

enum class Decision { Keep, Discard };

struct FilterReport {
    std::string doc_id;
    std::vector<RuleVerdict> verdicts;
    Decision decision = Decision::Keep;
    std::vector<std::string> discard_reasons;
};

inline constexpr std::string_view kReportHeader = "doc_id\tdecision\tfailed_rules";

/// "doc_id<TAB>keep|discard<TAB>r1;r2" with '-' for no failures, no trailing newline.
std::string write_report_line(const FilterReport& report);

struct CorpusReadResult {
    std::vector<Document> documents;
    /// "line N: message" for each record that failed to parse.
    std::vector<std::string> errors;
};

/// Reads a whole document file. Blank lines are skipped; malformed records are
/// collected in errors. Duplicate ids are reported as errors and the later record dropped.
CorpusReadResult read_documents(std::istream& in);
CorpusReadResult read_documents_file(const std::string& path);

}  // namespace curate
