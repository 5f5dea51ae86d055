#include "curate/math_validator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "curate/text.hpp"

namespace curate::math {

namespace {

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_math_env(std::string_view name) {
    static const std::set<std::string_view> envs = {
        "equation", "equation*", "align",  "align*",      "gather",   "gather*",
        "multline", "multline*", "eqnarray", "eqnarray*", "displaymath", "flalign", "flalign*"};
    return envs.contains(name);
}

bool is_theorem_env(std::string_view name) {
    static const std::set<std::string_view> envs = {"theorem",  "lemma",  "proof",   "corollary", "proposition",
                                                    "definition", "remark", "example", "claim",     "conjecture"};
    return envs.contains(name);
}

bool at(std::string_view s, std::size_t i, std::string_view tok) { return s.compare(i, tok.size(), tok) == 0; }

/// Reads "\name" at i (text[i] == '\\'); returns the letters-only name and the end offset.
std::pair<std::string_view, std::size_t> read_command(std::string_view s, std::size_t i) {
    std::size_t j = i + 1;
    while (j < s.size() && is_letter(s[j])) ++j;
    return {s.substr(i + 1, j - i - 1), j};
}

/// Reads "{arg}" starting at i (after optional spaces). Returns arg and end offset, or npos end.
std::pair<std::string_view, std::size_t> read_group(std::string_view s, std::size_t i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || s[i] != '{') return {{}, std::string_view::npos};
    const auto close = s.find('}', i + 1);
    if (close == std::string_view::npos) return {{}, std::string_view::npos};
    return {s.substr(i + 1, close - i - 1), close + 1};
}

bool blank_line_at(std::string_view s, std::size_t j) {
    if (s[j] != '\n') return false;
    ++j;
    while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
    return j < s.size() && s[j] == '\n';
}

struct Scan {
    std::vector<MathSpan> spans;
    std::vector<MathIssue> issues;
};

Scan scan(std::string_view text) {
    Scan out;
    const auto n = text.size();
    auto syntax_issue = [&](std::string code, std::size_t at_offset) {
        out.issues.push_back({MathCheck::LatexSyntax, std::move(code), at_offset});
    };

    // $ / $$ delimited spans stop at a blank line.
    auto dollar_span = [&](std::size_t i, bool display) {
        const std::size_t open_len = display ? 2 : 1;
        std::size_t j = i + open_len;
        while (j < n) {
            if (text[j] == '\\') {
                j += 2;
                continue;
            }
            if (blank_line_at(text, j)) break;
            if (display ? at(text, j, "$$") : text[j] == '$') {
                out.spans.push_back({display ? SpanKind::Display : SpanKind::Inline, i, i + open_len, j, j + open_len,
                                     true, {}});
                return j + open_len;
            }
            ++j;
        }
        j = std::min(j, n);
        out.spans.push_back({display ? SpanKind::Display : SpanKind::Inline, i, i + open_len, j, j, false, {}});
        syntax_issue(display ? "unclosed_display_math" : "unclosed_inline_math", i);
        return j;
    };

    auto bracket_span = [&](std::size_t i, bool display) {
        const std::string_view close = display ? "\\]" : "\\)";
        std::size_t j = i + 2;
        while (j < n) {
            if (at(text, j, close)) {
                out.spans.push_back({display ? SpanKind::Display : SpanKind::Inline, i, i + 2, j, j + 2, true, {}});
                return j + 2;
            }
            j += text[j] == '\\' ? 2 : 1;
        }
        out.spans.push_back({display ? SpanKind::Display : SpanKind::Inline, i, i + 2, n, n, false, {}});
        syntax_issue(display ? "unclosed_display_math" : "unclosed_inline_math", i);
        return n;
    };

    auto env_span = [&](std::size_t i, std::size_t content_begin, std::string_view env) {
        std::vector<std::string_view> inner;
        std::size_t j = content_begin;
        while (j < n) {
            if (text[j] != '\\') {
                ++j;
                continue;
            }
            const auto [cmd, after] = read_command(text, j);
            if (cmd == "begin" || cmd == "end") {
                const auto [name, group_end] = read_group(text, after);
                if (group_end == std::string_view::npos) {
                    j = after;
                    continue;
                }
                if (cmd == "begin") {
                    inner.push_back(name);
                } else if (!inner.empty() && inner.back() == name) {
                    inner.pop_back();
                } else if (name == env || is_math_env(name)) {
                    if (name != env) syntax_issue("env_mismatch", j);
                    out.spans.push_back({SpanKind::Environment, i, content_begin, j, group_end, true, std::string(env)});
                    return group_end;
                }
                j = group_end;
                continue;
            }
            j = cmd.empty() ? j + 2 : after;
        }
        out.spans.push_back({SpanKind::Environment, i, content_begin, n, n, false, std::string(env)});
        syntax_issue("unclosed_env", i);
        return n;
    };

    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        if (c == '$') {
            i = dollar_span(i, i + 1 < n && text[i + 1] == '$');
            continue;
        }
        if (c != '\\' || i + 1 >= n) {
            ++i;
            continue;
        }
        const char d = text[i + 1];
        if (d == '[' || d == '(') {
            i = bracket_span(i, d == '[');
            continue;
        }
        if (d == ']' || d == ')') {
            syntax_issue("unmatched_end", i);
            i += 2;
            continue;
        }
        if (!is_letter(d)) {
            i += 2;
            continue;
        }
        const auto [cmd, after] = read_command(text, i);
        if (cmd == "begin" || cmd == "end") {
            const auto [name, group_end] = read_group(text, after);
            if (group_end != std::string_view::npos && is_math_env(name)) {
                if (cmd == "begin") {
                    i = env_span(i, group_end, name);
                } else {
                    syntax_issue("unmatched_end", i);
                    i = group_end;
                }
                continue;
            }
        }
        i = after;
    }
    std::stable_sort(out.issues.begin(), out.issues.end(),
                     [](const MathIssue& a, const MathIssue& b) { return a.location < b.location; });
    return out;
}

char opener_for(char c) { return c == ')' ? '(' : c == ']' ? '[' : '{'; }

std::string unbalanced_code(char c) {
    switch (c) {
        case '(':
        case ')': return "unbalanced_paren";
        case '[':
        case ']': return "unbalanced_bracket";
        default: return "unbalanced_brace";
    }
}

std::size_t skip_group_or_token(std::string_view s, std::size_t j, std::size_t end) {
    if (j >= end) return j;
    if (s[j] == '{') {
        int depth = 0;
        while (j < end) {
            if (s[j] == '\\') {
                j += 2;
                continue;
            }
            if (s[j] == '{') ++depth;
            if (s[j] == '}' && --depth == 0) return j + 1;
            ++j;
        }
        return end;
    }
    if (s[j] == '\\') {
        const auto [cmd, after] = read_command(s, j);
        return cmd.empty() ? std::min(j + 2, end) : after;
    }
    return j + 1;
}

/// Position of the operand following a big operator, after limits and scripts.
std::size_t skip_limits(std::string_view s, std::size_t j, std::size_t end) {
    while (true) {
        while (j < end && text::is_space(s[j])) ++j;
        if (j >= end) return j;
        if ((at(s, j, "\\limits") && (j + 7 >= end || !is_letter(s[j + 7]))) ||
            (at(s, j, "\\nolimits") && (j + 9 >= end || !is_letter(s[j + 9])))) {
            j = read_command(s, j).second;
            continue;
        }
        if (s[j] == '_' || s[j] == '^') {
            ++j;
            while (j < end && text::is_space(s[j])) ++j;
            j = skip_group_or_token(s, j, end);
            continue;
        }
        return j;
    }
}

bool left_right_delimiter(std::string_view s, std::size_t& j, std::size_t end) {
    while (j < end && text::is_space(s[j])) ++j;
    if (j >= end) return false;
    if (s[j] == '\\') {
        const auto [cmd, after] = read_command(s, j);
        j = cmd.empty() ? std::min(j + 2, end) : after;
        return true;
    }
    ++j;
    return true;
}

void check_span(std::string_view text, const MathSpan& span, const std::unordered_set<std::string_view>& known,
                std::vector<MathIssue>& issues) {
    const auto end = span.content_end;
    std::vector<std::pair<char, std::size_t>> stack;
    std::vector<std::size_t> lefts;
    auto issue = [&](std::string code, std::size_t loc) { issues.push_back({MathCheck::WellFormed, std::move(code), loc}); };

    std::size_t j = span.content_begin;
    while (j < end) {
        const char c = text[j];
        if (c == '\\') {
            const auto [cmd, after] = read_command(text, j);
            if (cmd.empty()) {
                j = std::min(j + 2, end);
                continue;
            }
            const auto at_cmd = j;
            j = after;
            if (cmd == "left") {
                left_right_delimiter(text, j, end);
                lefts.push_back(at_cmd);
            } else if (cmd == "right") {
                left_right_delimiter(text, j, end);
                if (lefts.empty())
                    issue("left_right_mismatch", at_cmd);
                else
                    lefts.pop_back();
            } else if (!known.contains(cmd)) {
                issue("undefined_command", at_cmd);
            }
            if (cmd == "sum" || cmd == "prod" || cmd == "int" || cmd == "iint" || cmd == "iiint" || cmd == "oint") {
                const auto k = skip_limits(text, j, end);
                if (k >= end || text[k] == ')' || text[k] == ']' || text[k] == '}' || at(text, k, "\\right")) {
                    issue(cmd == "sum"    ? "incomplete_sum"
                          : cmd == "prod" ? "incomplete_product"
                                          : "incomplete_integral",
                          at_cmd);
                }
            }
            continue;
        }
        if (c == '(' || c == '[' || c == '{') {
            stack.emplace_back(c, j);
        } else if (c == ')' || c == ']' || c == '}') {
            if (stack.empty()) {
                issue(unbalanced_code(c), j);
            } else if (stack.back().first != opener_for(c)) {
                issue("mismatched_delimiter", j);
                stack.pop_back();
            } else {
                stack.pop_back();
            }
        }
        ++j;
    }
    for (const auto& [c, pos] : stack) issue(unbalanced_code(c), pos);
    for (auto pos : lefts) issue("left_right_mismatch", pos);
}

void sort_by_location(std::vector<MathIssue>& issues) {
    std::stable_sort(issues.begin(), issues.end(),
                     [](const MathIssue& a, const MathIssue& b) { return a.location < b.location; });
}

std::size_t non_space_count(std::string_view s, std::size_t b, std::size_t e) {
    std::size_t n = 0;
    for (std::size_t i = b; i < e && i < s.size(); ++i)
        if (!text::is_space(s[i])) ++n;
    return n;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    for (auto w : text::split_words(s)) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

std::string_view to_string(MathCheck c) {
    switch (c) {
        case MathCheck::LatexSyntax: return "latex_syntax";
        case MathCheck::WellFormed: return "wellformed";
        case MathCheck::Consistency: return "consistency";
        case MathCheck::Noise: return "noise";
    }
    return "noise";
}

const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> commands = {
        // greek
        "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon", "zeta", "eta", "theta", "vartheta", "iota",
        "kappa", "lambda", "mu", "nu", "xi", "pi", "varpi", "rho", "varrho", "sigma", "varsigma", "tau", "upsilon",
        "phi", "varphi", "chi", "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Upsilon",
        "Phi", "Psi", "Omega",
        // big operators and functions
        "frac", "dfrac", "tfrac", "cfrac", "sqrt", "sum", "prod", "coprod", "int", "iint", "iiint", "oint", "lim",
        "limsup", "liminf", "sup", "inf", "max", "min", "log", "ln", "lg", "exp", "sin", "cos", "tan", "cot", "sec",
        "csc", "arcsin", "arccos", "arctan", "sinh", "cosh", "tanh", "coth", "det", "dim", "ker", "deg", "gcd", "arg",
        "Pr", "hom", "bigcup", "bigcap", "bigoplus", "bigotimes", "bigwedge", "bigvee", "binom", "choose", "over",
        "atop",
        // relations and arrows
        "le", "leq", "ge", "geq", "neq", "ne", "approx", "equiv", "sim", "simeq", "cong", "propto", "in", "notin", "ni",
        "subset", "subseteq", "supset", "supseteq", "subsetneq", "ll", "gg", "prec", "succ", "preceq", "succeq", "mid",
        "parallel", "perp", "vdash", "models", "to", "gets", "mapsto", "rightarrow", "leftarrow", "Rightarrow",
        "Leftarrow", "leftrightarrow", "Leftrightarrow", "implies", "iff", "longrightarrow", "longleftarrow",
        "Longrightarrow", "longmapsto", "uparrow", "downarrow", "hookrightarrow", "leqslant", "geqslant", "lesssim",
        "gtrsim", "coloneqq", "triangleq", "asymp",
        // binary operators and symbols
        "pm", "mp", "times", "div", "cdot", "ast", "star", "circ", "bullet", "oplus", "ominus", "otimes", "oslash",
        "odot", "cup", "cap", "setminus", "wedge", "vee", "land", "lor", "lnot", "neg", "forall", "exists", "nexists",
        "partial", "nabla", "infty", "emptyset", "varnothing", "aleph", "hbar", "ell", "Re", "Im", "wp", "angle",
        "triangle", "dagger", "ddagger", "top", "bot", "square", "blacksquare", "qed", "therefore", "because",
        "intercal", "prime", "backslash", "not", "colon", "cdotp",
        // dots, accents, fonts
        "ldots", "cdots", "vdots", "ddots", "dots", "hat", "bar", "vec", "dot", "ddot", "tilde", "widehat",
        "widetilde", "overline", "underline", "overbrace", "underbrace", "overrightarrow", "mathbb", "mathbf",
        "mathcal", "mathrm", "mathit", "mathsf", "mathtt", "mathfrak", "mathscr", "boldsymbol", "text", "textbf",
        "textit", "textrm", "operatorname", "mbox",
        // delimiters and sizing
        "left", "right", "big", "Big", "bigg", "Bigg", "bigl", "bigr", "Bigl", "Bigr", "biggl", "biggr", "langle",
        "rangle", "lfloor", "rfloor", "lceil", "rceil", "lvert", "rvert", "lVert", "rVert", "vert", "Vert",
        // spacing and structure
        "quad", "qquad", "hspace", "vspace", "phantom", "boxed", "label", "ref", "eqref", "tag", "nonumber", "notag",
        "begin", "end", "displaystyle", "textstyle", "scriptstyle", "limits", "nolimits", "substack", "stackrel",
        "overset", "underset", "pmod", "bmod", "mod", "cases", "intertext", "shortintertext"};
    return commands;
}

std::vector<MathSpan> find_math_spans(std::string_view text) { return scan(text).spans; }

std::vector<MathIssue> check_latex_syntax(std::string_view text) { return scan(text).issues; }

std::vector<MathIssue> check_wellformedness(std::string_view text, const MathOptions& options) {
    std::unordered_set<std::string_view> known;
    for (const auto& c : known_commands()) known.insert(c);
    for (const auto& c : options.extra_commands) known.insert(c);
    std::vector<MathIssue> issues;
    for (const auto& span : scan(text).spans) check_span(text, span, known, issues);
    sort_by_location(issues);
    return issues;
}

std::vector<MathIssue> check_consistency(std::string_view text, const MathOptions& options) {
    std::vector<MathIssue> issues;
    auto issue = [&](std::string code, std::size_t loc) { issues.push_back({MathCheck::Consistency, std::move(code), loc}); };

    std::vector<std::pair<std::string, std::size_t>> labels;
    std::set<std::string, std::less<>> referenced;
    std::vector<std::pair<std::string_view, std::size_t>> theorem_stack;

    std::size_t i = 0;
    while ((i = text.find('\\', i)) != std::string_view::npos) {
        const auto [cmd, after] = read_command(text, i);
        if (cmd.empty()) {
            i += 2;
            continue;
        }
        if (cmd == "label" || cmd == "ref" || cmd == "eqref" || cmd == "cref" || cmd == "Cref" || cmd == "autoref" ||
            cmd == "pageref" || cmd == "vref") {
            const auto [arg, group_end] = read_group(text, after);
            if (group_end != std::string_view::npos) {
                if (cmd == "label") {
                    labels.emplace_back(std::string(text::trim(arg)), i);
                } else {
                    std::size_t p = 0;
                    while (p <= arg.size()) {
                        auto comma = arg.find(',', p);
                        if (comma == std::string_view::npos) comma = arg.size();
                        referenced.insert(std::string(text::trim(arg.substr(p, comma - p))));
                        p = comma + 1;
                    }
                }
                i = group_end;
                continue;
            }
        } else if (cmd == "begin" || cmd == "end") {
            const auto [name, group_end] = read_group(text, after);
            if (group_end != std::string_view::npos && is_theorem_env(name)) {
                if (cmd == "begin") {
                    theorem_stack.emplace_back(name, i);
                } else if (!theorem_stack.empty() && theorem_stack.back().first == name) {
                    theorem_stack.pop_back();
                } else {
                    issue("env_nesting", i);
                    const auto it = std::find_if(theorem_stack.rbegin(), theorem_stack.rend(),
                                                 [&](const auto& e) { return e.first == name; });
                    if (it != theorem_stack.rend()) theorem_stack.erase(std::next(it).base());
                }
                i = group_end;
                continue;
            }
        }
        i = after;
    }
    for (const auto& [name, pos] : labels)
        if (!referenced.contains(name)) issue("orphan_label", pos);
    for (const auto& [name, pos] : theorem_stack) issue("env_nesting", pos);

    if (options.variable_heuristic) {
        const auto spans = scan(text).spans;
        if (spans.size() >= 3) {
            std::map<char, std::vector<std::size_t>> uses;
            for (const auto& s : spans) {
                for (std::size_t j = s.content_begin; j < s.content_end; ++j) {
                    if (!is_letter(text[j])) continue;
                    const bool prev_ok = j == s.content_begin || (!is_letter(text[j - 1]) && text[j - 1] != '\\');
                    const bool next_ok = j + 1 >= s.content_end || !is_letter(text[j + 1]);
                    if (prev_ok && next_ok) uses[text[j]].push_back(j);
                    while (j + 1 < s.content_end && is_letter(text[j + 1])) ++j;
                }
            }
            for (const auto& [letter, where] : uses)
                if (where.size() == 1) issue("inconsistent_variable", where.front());
        }
    }
    sort_by_location(issues);
    return issues;
}

double formula_ratio(std::string_view text) {
    const auto spans = scan(text).spans;
    std::size_t math = 0;
    std::size_t delimiters = 0;
    for (const auto& s : spans) {
        math += non_space_count(text, s.content_begin, s.content_end);
        delimiters += non_space_count(text, s.open, s.content_begin) + non_space_count(text, s.content_end, s.close_end);
    }
    const auto total = non_space_count(text, 0, text.size()) - delimiters;
    if (total == 0) return 0.0;
    return static_cast<double>(math) / static_cast<double>(total);
}

std::vector<MathIssue> check_noise(std::string_view text, const MathOptions& options) {
    std::vector<MathIssue> issues;
    auto issue = [&](std::string code, std::size_t loc) { issues.push_back({MathCheck::Noise, std::move(code), loc}); };

    static constexpr std::string_view kEllipsis = "\xE2\x80\xA6";
    std::size_t i = 0;
    while (i < text.size()) {
        const std::string_view unit = text[i] == '?' ? std::string_view("?") : at(text, i, kEllipsis) ? kEllipsis : "";
        if (unit.empty()) {
            ++i;
            continue;
        }
        std::size_t run = 0;
        const auto start = i;
        while (at(text, i, unit)) {
            ++run;
            i += unit.size();
        }
        if (run >= options.placeholder_run) issue("placeholder", start);
    }
    for (const auto& marker : options.placeholder_markers) {
        if (marker.empty()) continue;
        for (auto p = text.find(marker); p != std::string_view::npos; p = text.find(marker, p + marker.size()))
            issue("placeholder", p);
    }

    std::set<std::string> seen;
    const auto spans = scan(text).spans;
    for (const auto& s : spans) {
        if (!s.display()) continue;
        auto body = collapse_whitespace(text.substr(s.content_begin, s.content_end - s.content_begin));
        if (body.empty()) continue;
        if (!seen.insert(std::move(body)).second) issue("repeated_derivation", s.open);
    }

    if (formula_ratio(text) > options.max_formula_ratio) issue("formula_ratio", 0);
    sort_by_location(issues);
    return issues;
}

MathVerdict validate_math(std::string_view text, const MathOptions& options) {
    MathVerdict verdict;
    auto add = [&](std::vector<MathIssue> found, MathCheck check) {
        if (!found.empty()) verdict.failed_checks.push_back(check);
        verdict.issues.insert(verdict.issues.end(), found.begin(), found.end());
    };
    add(check_latex_syntax(text), MathCheck::LatexSyntax);
    add(check_wellformedness(text, options), MathCheck::WellFormed);
    add(check_consistency(text, options), MathCheck::Consistency);
    add(check_noise(text, options), MathCheck::Noise);
    verdict.decision =
        verdict.failed_checks.size() >= options.min_failed_checks ? MathDecision::Remove : MathDecision::Retain;
    return verdict;
}

}  // namespace curate::math
