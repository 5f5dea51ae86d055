#include "curate/code_filter.hpp"

#include <algorithm>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include "curate/code_lexer.hpp"
#include "curate/simhash.hpp"
#include "curate/text.hpp"

namespace curate::code {

namespace {

using Kind = Segment::Kind;

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

/// Segment kind of every byte.
std::vector<Kind> kind_mask(std::string_view text, const LexResult& lexed) {
    std::vector<Kind> mask(text.size(), Kind::Code);
    for (const auto& seg : lexed.segments)
        std::fill(mask.begin() + static_cast<std::ptrdiff_t>(seg.begin),
                  mask.begin() + static_cast<std::ptrdiff_t>(seg.end), seg.kind);
    return mask;
}

bool is_open(char c) { return c == '(' || c == '[' || c == '{'; }
bool is_close(char c) { return c == ')' || c == ']' || c == '}'; }
char opener_for(char c) { return c == ')' ? '(' : c == ']' ? '[' : '{'; }

bool soft_wrappable(std::string_view line, std::size_t limit) {
    for (auto word : text::split_words(line))
        if (text::utf8_length(word) > limit) return false;
    return true;
}

bool punctuation_only(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) {
        return c == '{' || c == '}' || c == '(' || c == ')' || c == '[' || c == ']' || c == ';' || c == ',' ||
               text::is_space(c);
    });
}

bool first_word_is(std::string_view line, std::initializer_list<std::string_view> words) {
    for (auto w : words)
        if (text::starts_with_word(line, w)) return true;
    return false;
}

// `x: int` style bare annotations (no assignment, not a block header).
bool is_python_annotation(std::string_view line) {
    if (line.find('=') != std::string_view::npos || line.back() == ':') return false;
    std::size_t i = 0;
    if (!text::is_ident_start(line[0])) return false;
    while (i < line.size() && (text::is_ident_char(line[i]) || line[i] == '.')) ++i;
    const auto head = line.substr(0, i);
    if (first_word_is(head, {"lambda", "else", "elif", "if", "for", "while", "try", "except", "finally", "with",
                             "def", "class", "return", "case", "match"}))
        return false;
    while (i < line.size() && text::is_space(line[i])) ++i;
    return i < line.size() && line[i] == ':' && i + 1 < line.size();
}

// Declarations without initializer or body: `int x;`, `static Foo* bar;`, `void f(int a);`.
bool is_declaration_only(std::string_view line) {
    if (line.back() != ';' || line.find('=') != std::string_view::npos) return false;
    if (first_word_is(line, {"return", "throw", "delete", "goto", "break", "continue", "case", "else", "do", "new",
                             "co_return", "co_yield", "yield", "await", "typedef"}))
        return false;
    static const std::regex field(
        R"(^(?:(?:public|private|protected|static|final|const|extern|virtual|inline|unsigned|signed|volatile|transient)\s+)*)"
        R"([A-Za-z_][\w:<>,\.\[\]]*(?:\s+|\s*[\*&]+\s*)[A-Za-z_]\w*\s*(?:\[[^\]]*\])?\s*;$)");
    static const std::regex prototype(
        R"(^(?:(?:public|private|protected|static|final|extern|virtual|inline|abstract)\s+)*)"
        R"([A-Za-z_][\w:<>,\.\[\]]*(?:\s+|\s*[\*&]+\s*)[A-Za-z_]\w*\s*\([^;{}=]*\)\s*(?:const)?\s*(?:throws\s+[\w\., ]+)?;$)");
    const std::string s(line);
    return std::regex_match(s, field) || std::regex_match(s, prototype);
}

bool is_access_specifier(std::string_view line) {
    return line == "public:" || line == "private:" || line == "protected:";
}

const std::vector<std::string_view>& operators() {
    static const std::vector<std::string_view> ops = {
        ">>>=", "<<=", ">>=", "**=", "//=", "...", "===", "!==", "<=>", "->*", "==", "!=", "<=", ">=", "&&",
        "||",   "++",  "--",  "+=",  "-=",  "*=",  "/=",  "%=",  "&=",  "|=",  "^=", "->", "=>", "::", "<<",
        ">>",   "**",  "//"};
    return ops;
}

bool ident_byte(char c, bool start) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || (start ? text::is_ident_start(c) : text::is_ident_char(c));
}

void tokenize_code(std::string_view code, std::vector<std::string>& out) {
    std::size_t i = 0;
    while (i < code.size()) {
        const char c = code[i];
        if (text::is_space(c)) {
            ++i;
            continue;
        }
        if (ident_byte(c, true)) {
            const auto b = i;
            while (i < code.size() && ident_byte(code[i], false)) ++i;
            out.emplace_back(code.substr(b, i - b));
            continue;
        }
        if (text::is_digit(c) || (c == '.' && i + 1 < code.size() && text::is_digit(code[i + 1]))) {
            ++i;
            while (i < code.size()) {
                const char d = code[i];
                if (text::is_ident_char(d) || d == '.' || d == '\'') {
                    ++i;
                } else if ((d == '+' || d == '-') &&
                           (code[i - 1] == 'e' || code[i - 1] == 'E' || code[i - 1] == 'p' || code[i - 1] == 'P')) {
                    ++i;
                } else {
                    break;
                }
            }
            out.emplace_back("CONST");
            continue;
        }
        bool matched = false;
        for (auto op : operators()) {
            if (code.compare(i, op.size(), op) == 0) {
                out.emplace_back(op);
                i += op.size();
                matched = true;
                break;
            }
        }
        if (!matched) out.emplace_back(1, code[i++]);
    }
}

}  // namespace

std::string strip_comments(std::string_view text, const LanguageRuleSet& rules, std::vector<std::string>* warnings) {
    const auto lexed = lex(text, rules);
    std::string out;
    out.reserve(text.size());
    for (const auto& seg : lexed.segments) {
        const auto piece = text.substr(seg.begin, seg.end - seg.begin);
        if (seg.kind != Kind::Comment) {
            out += piece;
        } else {
            for (char c : piece)
                if (c == '\n') out += '\n';
        }
    }
    if (lexed.unterminated_block_comment && warnings)
        warnings->push_back("unterminated block comment at offset " + std::to_string(lexed.error_offset));
    return out;
}

Verdict long_line_filter(std::string_view text, const LanguageRuleSet& rules) {
    std::size_t longest = 0;
    bool pass = true;
    for (auto raw : text::split_lines(text)) {
        const auto line = strip_cr(raw);
        const auto len = text::utf8_length(line);
        longest = std::max(longest, len);
        if (len > rules.max_line_chars && !(rules.soft_wrap_detection && soft_wrappable(line, rules.max_line_chars)))
            pass = false;
    }
    return {pass, static_cast<double>(longest)};
}

Verdict file_length_filter(std::string_view text, const LanguageRuleSet& rules) {
    const auto tokens = count_tokens(text);
    return {tokens >= rules.min_tokens && tokens <= rules.max_tokens, static_cast<double>(tokens)};
}

Verdict check_syntax(std::string_view text, const LanguageRuleSet& rules) {
    const auto lexed = lex(text, rules);
    if (lexed.unterminated_string || lexed.unterminated_block_comment)
        return {false, static_cast<double>(lexed.error_offset)};
    std::vector<char> stack;
    for (const auto& seg : lexed.segments) {
        if (seg.kind != Kind::Code) continue;
        for (std::size_t i = seg.begin; i < seg.end; ++i) {
            const char c = text[i];
            if (is_open(c)) {
                stack.push_back(c);
            } else if (is_close(c)) {
                if (stack.empty() || stack.back() != opener_for(c)) return {false, static_cast<double>(i)};
                stack.pop_back();
            }
        }
    }
    if (!stack.empty()) return {false, static_cast<double>(text.size())};
    return {true, std::nullopt};
}

Verdict check_format(std::string_view text, const LanguageRuleSet& rules) {
    const auto stripped = strip_comments(text, rules);
    const auto lexed = lex(stripped, rules);
    const auto mask = kind_mask(stripped, lexed);

    std::size_t offending = 0;
    std::size_t tab_lines = 0;
    std::size_t space_lines = 0;
    std::vector<std::size_t> widths;

    int depth = 0;
    std::size_t line_start = 0;
    while (line_start <= stripped.size()) {
        auto nl = stripped.find('\n', line_start);
        if (nl == std::string::npos) nl = stripped.size();
        const auto line = strip_cr(std::string_view(stripped).substr(line_start, nl - line_start));
        const bool inside_literal = line_start > 0 && mask[line_start - 1] != Kind::Code;
        if (!text::is_blank(line) && !inside_literal) {
            std::size_t w = 0;
            bool tabs = false;
            bool spaces = false;
            while (w < line.size() && (line[w] == ' ' || line[w] == '\t')) {
                (line[w] == '\t' ? tabs : spaces) = true;
                ++w;
            }
            if (tabs && spaces) {
                ++offending;
            } else if (rules.indent_sensitive && depth == 0) {
                if (tabs) ++tab_lines;
                if (spaces) {
                    ++space_lines;
                    widths.push_back(w);
                }
            }
        }
        for (std::size_t i = line_start; i < nl; ++i) {
            if (mask[i] != Kind::Code) continue;
            if (is_open(stripped[i])) ++depth;
            else if (is_close(stripped[i])) depth = std::max(0, depth - 1);
        }
        line_start = nl + 1;
    }
    if (rules.indent_sensitive) {
        if (tab_lines > 0 && space_lines > 0) offending += std::min(tab_lines, space_lines);
        if (!widths.empty()) {
            const auto unit = *std::min_element(widths.begin(), widths.end());
            for (auto w : widths)
                if (w % unit != 0) ++offending;
        }
    }
    return {offending == 0, static_cast<double>(offending)};
}

Verdict bad_pattern_filter(std::string_view doc_id, std::string_view text, const LanguageRuleSet& rules) {
    for (const auto& p : rules.bad_patterns) {
        if (p.empty()) continue;
        if (text.find(p) != std::string_view::npos || doc_id.find(p) != std::string_view::npos) return {false, {}};
    }
    return {true, {}};
}

bool is_executable_line(std::string_view line, const LanguageRuleSet& rules) {
    if (line.empty()) return false;
    for (const auto& prefix : rules.non_executable_prefixes)
        if (line.starts_with(prefix)) return false;
    if (punctuation_only(line) || is_access_specifier(line)) return false;
    if (rules.indent_sensitive) return !is_python_annotation(line);
    return !is_declaration_only(line);
}

DensityCounts signal_density_counts(std::string_view text, const LanguageRuleSet& rules) {
    const auto stripped = strip_comments(text, rules);
    const auto lexed = lex(stripped, rules);
    const auto mask = kind_mask(stripped, lexed);
    DensityCounts counts;
    std::size_t start = 0;
    while (start <= stripped.size()) {
        auto nl = stripped.find('\n', start);
        if (nl == std::string::npos) nl = stripped.size();
        const auto line = text::trim(std::string_view(stripped).substr(start, nl - start));
        if (!line.empty()) {
            ++counts.non_empty;
            // lines made only of string-literal text (docstrings, data) are not code
            bool has_code = false;
            for (std::size_t i = start; i < nl; ++i)
                if (mask[i] == Kind::Code && !text::is_space(stripped[i])) {
                    has_code = true;
                    break;
                }
            if (has_code && is_executable_line(line, rules)) ++counts.executable;
        }
        start = nl + 1;
    }
    return counts;
}

double signal_density(std::string_view text, const LanguageRuleSet& rules) {
    return signal_density_counts(text, rules).density();
}

std::string normalize_for_dedup(std::string_view function_text, const LanguageRuleSet& rules) {
    const auto lexed = lex(function_text, rules);
    std::vector<std::string> tokens;
    for (const auto& seg : lexed.segments) {
        switch (seg.kind) {
            case Kind::Comment: break;
            case Kind::String: tokens.emplace_back("CONST"); break;
            case Kind::Code: tokenize_code(function_text.substr(seg.begin, seg.end - seg.begin), tokens); break;
        }
    }
    const std::unordered_set<std::string> keywords(rules.keywords.begin(), rules.keywords.end());
    std::unordered_map<std::string, std::size_t> names;
    std::string out;
    for (const auto& tok : tokens) {
        if (!out.empty()) out += ' ';
        if (tok != "CONST" && ident_byte(tok[0], true) && !keywords.contains(tok)) {
            const auto [it, _] = names.try_emplace(tok, names.size());
            out += "VAR_" + std::to_string(it->second);
        } else {
            out += tok;
        }
    }
    return out;
}

std::uint64_t normalized_fingerprint(std::string_view normalized) { return text::mix64(text::fnv1a64(normalized)); }

RuleOutcome evaluate_rules(const Document& doc, const LanguageRuleSet& rules, const PipelineOptions& options) {
    RuleOutcome out;
    auto& report = out.report;
    report.doc_id = doc.id;
    auto record = [&](std::string_view id, const Verdict& v) {
        report.verdicts.push_back({std::string(id), v.pass, v.measured});
        if (!v.pass) {
            report.decision = Decision::Discard;
            report.discard_reasons.emplace_back(id);
        }
        return v.pass;
    };
    auto hooked = [&](const std::map<std::string, ExternalCheck>& hooks, auto builtin) -> Verdict {
        if (const auto it = hooks.find(rules.language); it != hooks.end() && it->second)
            return {it->second(doc.text, rules), std::nullopt};
        return builtin();
    };

    if (!record(rule::kLongLine, long_line_filter(doc.text, rules))) return out;
    if (!record(rule::kFileLength, file_length_filter(doc.text, rules))) return out;
    if (!record(rule::kSyntax, hooked(options.syntax_hooks, [&] { return check_syntax(doc.text, rules); })))
        return out;
    if (!record(rule::kFormat, hooked(options.format_hooks, [&] { return check_format(doc.text, rules); })))
        return out;
    if (!record(rule::kBadPattern, bad_pattern_filter(doc.id, doc.text, rules))) return out;
    const double density = signal_density(doc.text, rules);
    if (!record(rule::kSignalDensity, {density >= rules.min_signal_density, density})) return out;

    const auto normalized = normalize_for_dedup(doc.text, rules);
    out.fingerprint = normalized_fingerprint(normalized);
    out.simhash = simhash64(normalized);
    return out;
}

FilterReport apply_dedup(RuleOutcome outcome, DedupIndex& index) {
    auto report = std::move(outcome.report);
    if (!outcome.fingerprint) return report;
    auto discard = [&](std::string_view id, std::optional<double> measured) {
        report.verdicts.push_back({std::string(id), false, measured});
        report.decision = Decision::Discard;
        report.discard_reasons.emplace_back(id);
    };
    if (index.find_exact(*outcome.fingerprint)) {
        discard(rule::kDuplicate, 0.0);
        return report;
    }
    if (const auto near = index.find_near(*outcome.simhash)) {
        discard(rule::kNearDuplicate, static_cast<double>(near->distance));
        return report;
    }
    report.verdicts.push_back({std::string(rule::kDuplicate), true, std::nullopt});
    index.insert(*outcome.fingerprint, *outcome.simhash, report.doc_id);
    return report;
}

FilterReport run_code_pipeline(const Document& doc, const LanguageRuleSet& rules, DedupIndex& index,
                               const PipelineOptions& options) {
    return apply_dedup(evaluate_rules(doc, rules, options), index);
}

FilterReport unknown_language_report(const Document& doc) {
    FilterReport report;
    report.doc_id = doc.id;
    report.verdicts.push_back({std::string(rule::kUnknownLanguage), false, std::nullopt});
    report.decision = Decision::Discard;
    report.discard_reasons.emplace_back(rule::kUnknownLanguage);
    return report;
}

FilterReport run_code_pipeline(const Document& doc, const RuleRegistry& registry, DedupIndex& index,
                               const PipelineOptions& options) {
    const auto* rules = doc.language_hint ? registry.resolve(*doc.language_hint) : nullptr;
    if (!rules) return unknown_language_report(doc);
    return run_code_pipeline(doc, *rules, index, options);
}

}  // namespace curate::code
