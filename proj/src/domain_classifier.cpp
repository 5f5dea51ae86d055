#include "curate/domain_classifier.hpp"

#include <array>
#include <regex>
#include <unordered_set>

#include "curate/code_filter.hpp"
#include "curate/math_validator.hpp"
#include "curate/text.hpp"

namespace curate::domain {

namespace {

bool ends_with_any(std::string_view s, std::string_view chars) {
    return !s.empty() && chars.find(s.back()) != std::string_view::npos;
}

bool has_any(std::string_view s, std::string_view chars) { return s.find_first_of(chars) != std::string_view::npos; }

std::string_view first_word(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && (text::is_ident_char(s[i]) || s[i] == '#')) ++i;
    return s.substr(0, i);
}

const std::unordered_set<std::string_view>& code_keywords() {
    static const std::unordered_set<std::string_view> k = {
        "def",    "class",  "return", "if",      "elif",    "else",     "for",       "while",  "import",
        "from",   "try",    "except", "catch",   "finally", "switch",   "case",      "break",  "continue",
        "const",  "let",    "var",    "function", "public", "private",  "protected", "static", "void",
        "int",    "long",   "double", "float",   "bool",    "char",     "struct",    "enum",   "namespace",
        "using",  "template", "package", "throw", "raise",  "yield",    "async",     "await",  "lambda",
        "#include", "#define", "#ifdef", "#ifndef", "#endif", "#pragma", "new", "delete", "auto", "fn",
        "func",   "with",   "print",  "assert",  "do",      "interface", "extends"};
    return k;
}

bool punctuation_only(std::string_view s) {
    for (char c : s)
        if (std::string_view("{}()[];,").find(c) == std::string_view::npos && !text::is_space(c)) return false;
    return true;
}


}  // namespace

BoilerplateIndex::BoilerplateIndex(std::size_t min_documents, std::size_t min_chars)
    : min_documents_(min_documents), min_chars_(min_chars) {}

void BoilerplateIndex::add_document(std::string_view text) {
    std::unordered_set<std::string_view> seen;
    for (auto line : text::split_lines(text)) {
        line = text::trim(line);
        if (line.size() < min_chars_ || !seen.insert(line).second) continue;
        ++counts_[std::string(line)];
    }
}

bool BoilerplateIndex::contains(std::string_view trimmed_line) const {
    if (trimmed_line.size() < min_chars_) return false;
    const auto it = counts_.find(std::string(trimmed_line));
    return it != counts_.end() && it->second >= min_documents_;
}

std::size_t BoilerplateIndex::size() const {
    std::size_t n = 0;
    for (const auto& [line, count] : counts_)
        if (count >= min_documents_) ++n;
    return n;
}

bool is_boilerplate_line(std::string_view line, bool first_line) {
    if (first_line && line.starts_with("#!")) return true;
    static constexpr std::array<std::string_view, 8> license = {
        "SPDX-License-Identifier", "Copyright (c)", "Copyright (C)",     "Copyright \xC2\xA9",
        "All rights reserved",     "Licensed under the", "Permission is hereby granted", "WITHOUT WARRANTIES OR CONDITIONS"};
    for (auto t : license)
        if (line.find(t) != std::string_view::npos) return true;
    if (line.size() >= 4 && std::string_view("=-*#~_/+").find(line[0]) != std::string_view::npos &&
        line.find_first_not_of(line[0]) == std::string_view::npos)
        return true;
    return false;
}

bool is_code_line(std::string_view line) {
    if (line.empty()) return false;
    if (punctuation_only(line)) return true;
    if (ends_with_any(line, ";{}")) return true;
    if (line[0] == '@' && line.size() > 1 && text::is_ident_start(line[1])) return true;
    const auto word = first_word(line);
    if (code_keywords().contains(word) && has_any(line, "(){}[]=:;<>")) return true;
    static const std::regex assignment(R"(^[A-Za-z_][\w.\[\]'"]*\s*(\+|-|\*|/|%|\||&|\^|<<|>>)?=[^=].*)");
    static const std::regex call(R"(^[A-Za-z_][\w.]*\(.*\)\s*;?$)");
    static const std::regex arrow(R"((=>|->|::|\+\+|--|&&|\|\|))");
    if (std::regex_match(line.begin(), line.end(), assignment)) return true;
    if (std::regex_match(line.begin(), line.end(), call)) return true;
    if (std::regex_search(line.begin(), line.end(), arrow) && has_any(line, "();")) return true;
    return false;
}

DensityBreakdown code_density(std::string_view text, const code::LanguageRuleSet& rules,
                              const BoilerplateIndex* boilerplate) {
    DensityBreakdown out;
    if (text.empty()) return out;
    const auto stripped = code::strip_comments(text, rules);
    const auto original_lines = text::split_lines(text);
    const auto lines = text::split_lines(stripped);
    // a shebang is "# ..." for some rule sets and already gone after stripping
    const bool shebang = text.starts_with("#!");
    std::size_t run = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        const bool was_blank = i >= original_lines.size() || text::is_blank(original_lines[i]);
        if (line.empty()) {
            if (!was_blank) ++out.removed_lines;
            continue;
        }
        if (is_boilerplate_line(line, i == 0) || (i == 0 && shebang) ||
            (boilerplate != nullptr && boilerplate->contains(line))) {
            ++out.removed_lines;
            continue;
        }
        if (is_code_line(line)) {
            ++out.code_lines;
            run = 0;
        } else {
            ++out.prose_lines;
            out.longest_prose_run = std::max(out.longest_prose_run, ++run);
        }
    }
    const auto denom = out.code_lines + out.prose_lines;
    out.density = denom == 0 ? 0.0 : static_cast<double>(out.code_lines) / static_cast<double>(denom);
    return out;
}

bool has_math_markers(std::string_view text) {
    for (const auto& span : math::find_math_spans(text))
        if (span.closed && span.content_end > span.content_begin) return true;
    return false;
}

bool looks_non_primary_language(std::string_view text, const DomainOptions& options) {
    std::size_t ascii_letters = 0;
    std::size_t other_letters = 0;
    for (std::size_t i = 0; i < text.size();) {
        const auto cp = text::next_code_point(text, i);
        if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'))
            ++ascii_letters;
        else if (cp >= 0xC0 && !(cp >= 0x2000 && cp <= 0x2BFF) && cp != 0xD7 && cp != 0xF7)
            ++other_letters;
    }
    const auto letters = ascii_letters + other_letters;
    if (letters == 0) return false;
    if (static_cast<double>(other_letters) / static_cast<double>(letters) > options.max_non_ascii_letter_share)
        return true;

    static const std::unordered_set<std::string_view> common = {
        "the", "and", "ing", "ion", "tio", "ent", "ati", "for", "her", "ter", "hat", "tha", "ere", "ate", "his",
        "con", "res", "ver", "all", "ons", "nce", "men", "ith", "ted", "ers", "pro", "thi", "wit", "are", "ess",
        "not", "ive", "was", "ect", "rea", "com", "eve", "per", "int", "est", "sta", "cti", "ica", "ist", "ear",
        "ain", "one", "our", "iti", "rat", "nte", "tin", "ine", "der", "ome", "man", "pre", "rom", "tra", "whi",
        "ave", "str", "act", "ill", "ure", "ide", "ove", "cal", "ble", "out", "sti", "tic", "oun", "enc", "ore",
        "ant", "ity", "fro", "art", "tur", "par", "red", "oth", "eri", "hic", "ies", "ste", "ght", "ally", "use",
        "ati", "ont", "ght", "ses", "lin", "ler", "ser", "tho", "hes", "ind", "ing", "ial", "ons", "lly", "ted"};
    std::size_t total = 0;
    std::size_t hits = 0;
    for (auto word : text::split_words(text)) {
        std::string w;
        for (char c : word) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if (c >= 'a' && c <= 'z') w += c;
        }
        for (std::size_t i = 0; i + 3 <= w.size(); ++i) {
            ++total;
            if (common.contains(std::string_view(w).substr(i, 3))) ++hits;
        }
    }
    if (total < options.min_trigrams) return false;
    return static_cast<double>(hits) / static_cast<double>(total) < options.min_trigram_hit_rate;
}

DensityBreakdown document_density(const Document& doc, const DomainOptions& options) {
    const code::LanguageRuleSet* rules = nullptr;
    if (options.registry != nullptr && doc.language_hint) rules = options.registry->resolve(*doc.language_hint);
    static const auto generic = code::generic_rules();
    return code_density(doc.text, rules != nullptr ? *rules : generic, options.boilerplate);
}

namespace {

DomainLabel code_family(const Document& doc, const DensityBreakdown& d, const DomainOptions& options) {
    if (doc.provenance == Provenance::Repository && d.density > options.density_threshold &&
        d.longest_prose_run <= options.max_prose_run)
        return DomainLabel::Code;
    return DomainLabel::CodeNL;
}

}  // namespace

DomainLabel classify_code_family(const Document& doc, const DomainOptions& options) {
    return code_family(doc, document_density(doc, options), options);
}

DomainLabel categorize_domain(const Document& doc, const DomainOptions& options) {
    if (doc.provenance == Provenance::Arxiv && has_math_markers(doc.text)) return DomainLabel::Math;
    if (doc.provenance == Provenance::WikiDump) return DomainLabel::Wikipedia;
    if (doc.provenance == Provenance::Books) return DomainLabel::Books;
    const auto d = document_density(doc, options);
    const bool non_primary = options.language_hook ? options.language_hook(doc.text)
                                                   : d.code_lines < options.min_code_lines &&
                                                         looks_non_primary_language(doc.text, options);
    if (non_primary) return DomainLabel::Multilingual;
    if (d.code_lines >= options.min_code_lines) return code_family(doc, d, options);
    return DomainLabel::Web;
}

}  // namespace curate::domain
