#include "curate/code_rules.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "curate/error.hpp"

namespace curate::code {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

void LanguageRuleSet::validate() const {
    if (max_line_chars == 0) throw ConfigError(language + ": max_line_chars must be positive");
    if (min_tokens == 0) throw ConfigError(language + ": min_tokens must be positive");
    if (min_tokens >= max_tokens) throw ConfigError(language + ": min_tokens must be below max_tokens");
    if (!(min_signal_density >= 0.0 && min_signal_density <= 1.0))
        throw ConfigError(language + ": min_signal_density must lie in [0,1]");
    for (const auto& b : block_comments)
        if (b.open.empty() || b.close.empty()) throw ConfigError(language + ": empty block comment delimiter");
    for (const auto& m : line_comments)
        if (m.empty()) throw ConfigError(language + ": empty line comment marker");
}

LanguageRuleSet python_rules() {
    LanguageRuleSet r;
    r.language = "python";
    r.max_line_chars = 200;
    r.min_tokens = 10;
    r.max_tokens = 10000;
    r.line_comments = {"#"};
    r.triple_quoted_strings = true;
    r.indent_sensitive = true;
    r.bad_patterns = {"__pycache__", ".pyc", "# Generated by Django", "# -*- generated -*-", "DO NOT EDIT"};
    r.keywords = {"False",  "None",   "True",    "and",      "as",       "assert", "async", "await",
                  "break",  "class",  "continue", "def",     "del",      "elif",   "else",  "except",
                  "finally", "for",   "from",    "global",   "if",       "import", "in",    "is",
                  "lambda", "nonlocal", "not",   "or",       "pass",     "raise",  "return", "try",
                  "while",  "with",   "yield",   "self",     "print"};
    r.non_executable_prefixes = {"import ", "from ", "@"};
    return r;
}

LanguageRuleSet javascript_rules() {
    LanguageRuleSet r;
    r.language = "javascript";
    r.max_line_chars = 150;
    r.min_tokens = 10;
    r.max_tokens = 8000;
    r.line_comments = {"//"};
    r.block_comments = {{"/*", "*/"}};
    r.multiline_quote_chars = "`";
    r.bad_patterns = {".min.js", "//# sourceMappingURL=", "/*! For license information", "DO NOT EDIT"};
    r.keywords = {"async",  "await",   "break",  "case",     "catch",  "class",  "const",  "continue",
                  "debugger", "default", "delete", "do",     "else",   "export", "extends", "false",
                  "finally", "for",    "function", "if",     "import", "in",     "instanceof", "let",
                  "new",    "null",    "return", "super",    "switch", "this",   "throw",  "true",
                  "try",    "typeof",  "undefined", "var",   "void",   "while",  "with",   "yield"};
    r.non_executable_prefixes = {"import ", "export {", "export *", "'use strict'", "\"use strict\""};
    return r;
}

LanguageRuleSet java_rules() {
    LanguageRuleSet r;
    r.language = "java";
    r.max_line_chars = 150;
    r.min_tokens = 15;
    r.max_tokens = 9000;
    r.line_comments = {"//"};
    r.block_comments = {{"/*", "*/"}};
    r.bad_patterns = {"@Generated", "lombok.", "Generated by", "DO NOT EDIT", "AUTO-GENERATED"};
    r.keywords = {"abstract", "assert",  "boolean", "break",   "byte",      "case",     "catch",   "char",
                  "class",    "const",   "continue", "default", "do",       "double",   "else",    "enum",
                  "extends",  "final",   "finally", "float",   "for",       "if",       "implements", "import",
                  "instanceof", "int",   "interface", "long",  "native",    "new",      "null",    "package",
                  "private",  "protected", "public", "return", "short",     "static",   "super",   "switch",
                  "synchronized", "this", "throw",  "throws",  "transient", "try",      "void",    "volatile",
                  "while",    "true",    "false",   "var",     "String"};
    r.non_executable_prefixes = {"import ", "package ", "@"};
    return r;
}

LanguageRuleSet cpp_rules() {
    LanguageRuleSet r;
    r.language = "cpp";
    r.max_line_chars = 150;
    r.min_tokens = 15;
    r.max_tokens = 9000;
    r.line_comments = {"//"};
    r.block_comments = {{"/*", "*/"}};
    r.digit_separator_quote = true;
    r.bad_patterns = {"Generated by the protocol buffer compiler", "generated by SWIG", "DO NOT EDIT",
                      "automatically generated by"};
    r.keywords = {"alignas",  "auto",     "bool",     "break",    "case",      "catch",    "char",
                  "class",    "const",    "constexpr", "continue", "decltype", "default",  "delete",
                  "do",       "double",   "else",     "enum",     "explicit",  "extern",   "false",
                  "float",    "for",      "friend",   "goto",     "if",        "inline",   "int",
                  "long",     "mutable",  "namespace", "new",     "noexcept",  "nullptr",  "operator",
                  "private",  "protected", "public",  "return",   "short",     "signed",   "sizeof",
                  "static",   "static_cast", "struct", "switch",  "template",  "this",     "throw",
                  "true",     "try",      "typedef",  "typename", "union",     "unsigned", "using",
                  "virtual",  "void",     "volatile", "while",    "std",       "size_t",   "include",
                  "define"};
    r.non_executable_prefixes = {"#", "using ", "template <", "template<"};
    return r;
}

LanguageRuleSet generic_rules() {
    LanguageRuleSet r;
    r.language = "generic";
    r.line_comments = {"//"};
    r.block_comments = {{"/*", "*/"}};
    return r;
}

RuleRegistry RuleRegistry::defaults() {
    RuleRegistry reg;
    reg.add(python_rules(), {"py", "python3"});
    reg.add(javascript_rules(), {"js", "node", "ecmascript"});
    reg.add(java_rules(), {});
    reg.add(cpp_rules(), {"c++", "cxx", "cc", "hpp"});
    return reg;
}

void RuleRegistry::add(LanguageRuleSet rules, const std::vector<std::string>& aliases) {
    rules.validate();
    const auto name = lower(rules.language);
    for (const auto& a : aliases) aliases_[lower(a)] = name;
    rules_[name] = std::move(rules);
}

const LanguageRuleSet* RuleRegistry::resolve(std::string_view hint) const {
    auto key = lower(hint);
    if (auto a = aliases_.find(key); a != aliases_.end()) key = a->second;
    const auto it = rules_.find(key);
    return it == rules_.end() ? nullptr : &it->second;
}

std::vector<std::string> RuleRegistry::languages() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : rules_) out.push_back(name);
    return out;
}

namespace {

std::size_t count_field(const nlohmann::json& cfg, const char* key) {
    const auto& v = cfg.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(std::string(key) + " must be a non-negative integer");
    return v.get<std::size_t>();
}

}  // namespace

void RuleRegistry::merge_json(std::string_view json_text) {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("rule config: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("rule config must be an object keyed by language");
    for (const auto& [lang, cfg] : root.items()) {
        if (!cfg.is_object()) throw ConfigError("rule config for '" + lang + "' must be an object");
        LanguageRuleSet r;
        if (const auto* existing = resolve(lang)) {
            r = *existing;
        } else {
            r = generic_rules();
            r.language = lower(lang);
        }
        try {
            if (cfg.contains("max_line_chars")) r.max_line_chars = count_field(cfg, "max_line_chars");
            if (cfg.contains("min_tokens")) r.min_tokens = count_field(cfg, "min_tokens");
            if (cfg.contains("max_tokens")) r.max_tokens = count_field(cfg, "max_tokens");
            if (cfg.contains("line_comments")) r.line_comments = cfg.at("line_comments").get<std::vector<std::string>>();
            if (cfg.contains("block_comments")) {
                r.block_comments.clear();
                for (const auto& pair : cfg.at("block_comments")) {
                    const auto v = pair.get<std::vector<std::string>>();
                    if (v.size() != 2) throw ConfigError(lang + ": block_comments entries are [open, close]");
                    r.block_comments.push_back({v[0], v[1]});
                }
            }
            if (cfg.contains("quote_chars")) r.quote_chars = cfg.at("quote_chars").get<std::string>();
            if (cfg.contains("multiline_quote_chars"))
                r.multiline_quote_chars = cfg.at("multiline_quote_chars").get<std::string>();
            if (cfg.contains("triple_quoted_strings")) r.triple_quoted_strings = cfg.at("triple_quoted_strings").get<bool>();
            if (cfg.contains("indent_sensitive")) r.indent_sensitive = cfg.at("indent_sensitive").get<bool>();
            if (cfg.contains("bad_patterns")) r.bad_patterns = cfg.at("bad_patterns").get<std::vector<std::string>>();
            if (cfg.contains("keywords")) r.keywords = cfg.at("keywords").get<std::vector<std::string>>();
            if (cfg.contains("non_executable_prefixes"))
                r.non_executable_prefixes = cfg.at("non_executable_prefixes").get<std::vector<std::string>>();
            if (cfg.contains("min_signal_density")) r.min_signal_density = cfg.at("min_signal_density").get<double>();
            if (cfg.contains("soft_wrap_detection")) r.soft_wrap_detection = cfg.at("soft_wrap_detection").get<bool>();
        } catch (const json::exception& e) {
            throw ConfigError("rule config for '" + lang + "': " + e.what());
        }
        std::vector<std::string> aliases;
        if (cfg.contains("aliases")) aliases = cfg.at("aliases").get<std::vector<std::string>>();
        const auto canonical = r.language;
        add(std::move(r), aliases);
        if (lower(lang) != canonical) aliases_[lower(lang)] = canonical;
    }
}

void RuleRegistry::merge_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open rule config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    merge_json(ss.str());
}

}  // namespace curate::code
