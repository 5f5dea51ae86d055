// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "curate/cli.hpp"
#include "curate/code_filter.hpp"
#include "curate/dedup_index.hpp"
#include "curate/error.hpp"
#include "curate/math_validator.hpp"
#include "curate/mixer.hpp"
#include "curate/rng.hpp"
#include "curate/router.hpp"
#include "curate/routing_analysis.hpp"
#include "curate/scaffold_model.hpp"
#include "curate/scaffold_select.hpp"
#include "curate/simhash.hpp"
#include "support/synth.hpp"

using namespace curate;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kFixtureSeconds = 5.0;
constexpr double kSimhashRecall = 0.95;
constexpr double kSimhashFalseRate = 0.01;
constexpr double kHeldOutAccuracy = 0.95;
constexpr double kPrecisionFloor = 0.999;
constexpr double kSignTestAlpha = 0.01;
constexpr double kRatioTolerance = 1e-9;
constexpr double kSoftmaxTolerance = 1e-9;
constexpr int kWarmupWinsRequired = 18;
constexpr double kRouterSeconds = 30.0;
constexpr double kJsReferenceTolerance = 1e-4;
constexpr double kPipelineSeconds = 60.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---- 1. filter-rule fixtures --------------------------------------------------

struct FixtureFile {
    std::string name;
    std::string language;
    std::string text;
    /// Empty for keep, otherwise the first failing rule.
    std::string expected_reason;
};

std::string terminator(const std::string& lang) { return lang == "python" ? "" : ";"; }

/// Executable statements totalling exactly `tokens` whitespace tokens.
std::string statements_with_tokens(const std::string& lang, std::size_t tokens) {
    std::string out;
    const auto t = terminator(lang);
    const std::size_t full = tokens / 3;
    for (std::size_t i = 0; i < full; ++i) out += "v" + std::to_string(i) + " = " + std::to_string(i % 97) + t + "\n";
    if (tokens % 3 == 1) out += "f()" + t + "\n";
    if (tokens % 3 == 2) out += "f(1, 2)" + t + "\n";
    return out;
}

/// An assignment of a string literal that is exactly `code_points` long, built from `unit`.
std::string literal_line(const std::string& lang, std::size_t code_points, const std::string& unit) {
    const std::string head = "s = \"";
    const std::string tail = "\"" + terminator(lang);
    std::string body;
    for (std::size_t i = 0; i + head.size() + tail.size() < code_points; ++i) body += unit;
    return head + body + tail + "\n";
}

std::string non_executable_line(const std::string& lang, std::size_t i) {
    const auto n = std::to_string(i);
    if (lang == "python") return "import m" + n + "\n";
    if (lang == "javascript") return "import m" + n + " from 'm" + n + "';\n";
    if (lang == "java") return "import a.m" + n + ";\n";
    return "#include <m" + n + ">\n";
}

/// 100 non-empty lines, `executable` of them statements.
std::string density_file(const std::string& lang, std::size_t executable) {
    std::string out;
    for (std::size_t i = 0; i < 100 - executable; ++i) out += non_executable_line(lang, i);
    for (std::size_t i = 0; i < executable; ++i)
        out += "w" + std::to_string(i) + " = " + std::to_string(i) + terminator(lang) + "\n";
    return out;
}

std::vector<FixtureFile> filter_fixture() {
    std::vector<FixtureFile> files;
    const auto registry = code::RuleRegistry::defaults();
    auto g = rng::engine(11, "acceptance.fixture");
    for (const std::string lang : {"python", "javascript", "java", "cpp"}) {
        const auto& r = *registry.resolve(lang);
        const auto pad = statements_with_tokens(lang, 30);
        const auto L = r.max_line_chars;
        auto add = [&](std::string name, std::string text, std::string reason) {
            files.push_back({lang + "/" + name, lang, std::move(text), std::move(reason)});
        };
        add("line_at_limit", pad + literal_line(lang, L, "a"), "");
        add("line_over_limit", pad + literal_line(lang, L + 1, "a"), "long_line");
        add("line_at_limit_multibyte", pad + literal_line(lang, L, "\xC3\xA9"), "");
        add("tokens_below_min", statements_with_tokens(lang, r.min_tokens - 1), "file_length");
        add("tokens_at_min", statements_with_tokens(lang, r.min_tokens), "");
        add("tokens_at_max", statements_with_tokens(lang, r.max_tokens), "");
        add("tokens_over_max", statements_with_tokens(lang, r.max_tokens + 1), "file_length");
        add("density_029", density_file(lang, 29), "signal_density");
        add("density_030", density_file(lang, 30), "");
        add("density_031", density_file(lang, 31), "");
        add("unbalanced_paren", pad + "v = (1 + 2" + terminator(lang) + "\n", "syntax");
        const std::string mixed = lang == "python" ? "def f():\n \treturn 1\n" : "void f() {\n \treturn;\n}\n";
        add("mixed_indentation", pad + mixed, "format");
        const std::string comment = lang == "python" ? "# " : "// ";
        add("generated_marker", comment + "DO NOT EDIT\n" + pad, "bad_pattern");
        add("clean_module", synth::code_document(g, lang, 3), "");
        add("comment_long_line", pad + comment + std::string(L + 5, 'c') + "\n", "long_line");
    }
    return files;
}

Outcome criterion_filter_fixture() {
    const auto files = filter_fixture();
    const auto registry = code::RuleRegistry::defaults();
    const auto start = Clock::now();
    std::size_t agree = 0;
    std::vector<std::string> wrong;
    for (const auto& f : files) {
        Document d;
        d.id = f.name;
        d.text = f.text;
        d.language_hint = f.language;
        code::DedupIndex index(3);
        const auto report = code::run_code_pipeline(d, registry, index);
        const std::string got = report.decision == Decision::Keep ? "" : report.discard_reasons.front();
        if (got == f.expected_reason) ++agree;
        else wrong.push_back(f.name + " expected '" + f.expected_reason + "' got '" + got + "'");
    }
    const double secs = seconds_since(start);
    std::ostringstream d;
    d << agree << "/" << files.size() << " files agree, " << secs << " s";
    for (const auto& w : wrong) d << "; " << w;
    return {files.size() == 60 && agree == files.size() && secs < kFixtureSeconds, d.str()};
}

// ---- 2. dedup oracle --------------------------------------------------------

Outcome criterion_dedup() {
    const auto rules = code::python_rules();
    bool pass = true;
    std::size_t planted_total = 0, planted_flagged = 0, recalled = 0, false_merges = 0, oracle_misses = 0;
    std::uint64_t other_pairs = 0, other_close = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto set = synth::dedup_functions(seed, 1000, 100);
        const auto n = set.docs.size();
        std::vector<std::string> norm(n);
        std::vector<std::uint64_t> sims(n);
        for (std::size_t i = 0; i < n; ++i) {
            norm[i] = code::normalize_for_dedup(set.docs[i].text, rules);
            sims[i] = code::simhash64(norm[i]);
        }
        // exact level through the index, in stream order
        code::DedupIndex index(3);
        std::vector<std::optional<std::string>> merged_into(n);
        std::map<std::string, std::size_t> position;
        for (std::size_t i = 0; i < n; ++i) {
            position[set.docs[i].id] = i;
            const auto fp = code::normalized_fingerprint(norm[i]);
            if (auto owner = index.find_exact(fp)) merged_into[i] = *owner;
            else index.insert(fp, sims[i], set.docs[i].id);
        }
        // brute-force oracle: i is a duplicate iff some earlier j has the same normalized text
        for (std::size_t i = 0; i < n; ++i) {
            bool oracle_dup = false;
            for (std::size_t j = 0; j < i && !oracle_dup; ++j) oracle_dup = norm[j] == norm[i];
            if (merged_into[i]) {
                if (norm[position.at(*merged_into[i])] != norm[i]) ++false_merges;
            } else if (oracle_dup) {
                ++oracle_misses;
            }
        }
        std::set<std::pair<std::size_t, std::size_t>> planted;
        for (const auto& [o, d] : set.planted) {
            planted.insert({std::min(o, d), std::max(o, d)});
            ++planted_total;
            if (merged_into[d] && norm[position.at(*merged_into[d])] == norm[o]) ++recalled;
            if (code::hamming_distance(sims[o], sims[d]) <= 3) ++planted_flagged;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (planted.contains({i, j}) || norm[i] == norm[j]) continue;
                ++other_pairs;
                if (code::hamming_distance(sims[i], sims[j]) <= 3) ++other_close;
            }
    }
    const double flag_rate = static_cast<double>(planted_flagged) / static_cast<double>(planted_total);
    const double false_rate = static_cast<double>(other_close) / static_cast<double>(other_pairs);
    pass = recalled == planted_total && false_merges == 0 && oracle_misses == 0 && flag_rate >= kSimhashRecall &&
           false_rate <= kSimhashFalseRate;
    std::ostringstream d;
    d << "exact recall " << recalled << "/" << planted_total << ", false merges " << false_merges
      << ", oracle misses " << oracle_misses << ", simhash flagged " << flag_rate << ", false-pair rate " << false_rate
      << " over 5 seeds";
    return {pass, d.str()};
}

// ---- 3. math validator fixture ------------------------------------------------

struct ExpectedIssue {
    math::MathCheck check;
    std::string code;
    /// Location is the occurrence-th match of anchor; an empty anchor means offset 0.
    std::string anchor;
    std::size_t occurrence = 0;
};

struct MathCase {
    std::string text;
    std::vector<ExpectedIssue> expected;
    bool variable_heuristic = false;
};

std::vector<MathCase> math_fixture() {
    using C = math::MathCheck;
    const auto S = C::LatexSyntax;
    const auto W = C::WellFormed;
    const auto K = C::Consistency;
    const auto N = C::Noise;
    return {
        {"Let $x + y = z$ and $$a^2 + b^2 = c^2$$ hold for every triangle we draw.", {}},
        {"We note that $x + y is large.\n\nNext paragraph here.", {{S, "unclosed_inline_math", "$x"}}},
        {"Consider $$a + b\n\nand more prose follows here.", {{S, "unclosed_display_math", "$$"}}},
        {"Observe \\[ x^2 + 1 and the rest of the text.", {{S, "unclosed_display_math", "\\["}}},
        {"Text before. \\begin{equation} x = 1 and prose continues without end.",
         {{S, "unclosed_env", "\\begin"}}},
        {"Text. \\begin{equation} x = 1 \\end{align} more text here.", {{S, "env_mismatch", "\\end"}}},
        {"Some prose \\] and more words here.", {{S, "unmatched_end", "\\]"}}},
        {"Words here \\end{align} and words.", {{S, "unmatched_end", "\\end"}}},
        {"Let $f(x + 1$ be given in the text here.", {{W, "unbalanced_paren", "("}}},
        {"Let $x + 1)$ be given in this text.", {{W, "unbalanced_paren", ")"}}},
        {"Let $[a, b$ be an interval in the text.", {{W, "unbalanced_bracket", "["}}},
        {"Then $\\frac{a}{b$ is a ratio we study.", {{W, "unbalanced_brace", "{b"}}},
        {"Then $(a + b]$ is the set we use.", {{W, "mismatched_delimiter", "]"}}},
        {"Then $\\left( x + y$ appears in text.", {{W, "left_right_mismatch", "\\left"}}},
        {"Then $x + y \\right)$ appears here.", {{W, "left_right_mismatch", "\\right"}}},
        {"Then $\\foo{x} + 1$ appears here in text.", {{W, "undefined_command", "\\foo"}}},
        {"We write $\\sum_{i=1}^{n}$ as shorthand in text.", {{W, "incomplete_sum", "\\sum"}}},
        {"We write $(\\prod_{k})$ in text here.", {{W, "incomplete_product", "\\prod"}}},
        {"We write $\\int_0^1$ here in the text.", {{W, "incomplete_integral", "\\int"}}},
        {"See the result.\n\\begin{equation}\\label{eq:a} x = 1 \\end{equation}\nNo reference is made here.",
         {{K, "orphan_label", "\\label"}}},
        {"See the result.\n\\begin{equation}\\label{eq:a} x = 1 \\end{equation}\nAs shown in \\cref{eq:b, eq:a}.",
         {}},
        {"\\begin{theorem} A claim. \\begin{proof} Details. \\end{theorem} \\end{proof}",
         {{K, "env_nesting", "\\end{theorem}"}}},
        {"\\begin{lemma} Statement without an end in sight.", {{K, "env_nesting", "\\begin{lemma}"}}},
        {"The value is ??? for now in text.", {{N, "placeholder", "???"}}},
        {"The proof is \xE2\x80\xA6\xE2\x80\xA6\xE2\x80\xA6 left for later.", {{N, "placeholder", "\xE2\x80\xA6"}}},
        {"TODO: finish this proof in the text.", {{N, "placeholder", "TODO"}}},
        {"First we find $$x + 1 = 2$$ and then, after much more discussion in words, again $$x  +  1 = 2$$ "
         "appears in the text.",
         {{N, "repeated_derivation", "$$", 2}}},
        {"$$a + b + c + d + e + f + g = h$$ ok", {{N, "formula_ratio", ""}}},
        {"Then $\\frac{a}{b is big.\n\nNext paragraph.",
         {{S, "unclosed_inline_math", "$"}, {W, "unbalanced_brace", "{b"}}},
        {"Here $\\foo + 1$ and ??? in text.", {{W, "undefined_command", "\\foo"}, {N, "placeholder", "???"}}},
        {"\\begin{lemma} Text. \\[ x = 1 here",
         {{S, "unclosed_display_math", "\\["}, {K, "env_nesting", "\\begin{lemma}"}}},
        {"\\label{q} Then $(a$ and TODO.",
         {{W, "unbalanced_paren", "("}, {K, "orphan_label", "\\label"}, {N, "placeholder", "TODO"}}},
        {"\\begin{claim} $\\foo$ ??? \\end{align}",
         {{S, "unmatched_end", "\\end{align}"},
          {W, "undefined_command", "\\foo"},
          {K, "env_nesting", "\\begin{claim}"},
          {N, "placeholder", "???"}}},
        {"It costs \\$5 and \\$6 in total here.", {}},
        {"Let \\(x^2\\) be positive in this text.", {}},
        {"\\begin{equation}\\begin{cases} x & y \\end{cases}\\end{equation} text follows here and there.", {}},
        {"Take $a\n\nand $b$ later in text.", {{S, "unclosed_inline_math", "$"}}},
        {"We have $\\sum_{i=1}^{n} i^2$ in text here.", {}},
        {"We have $\\left( \\int\\limits_0^1 \\right)$ here in text.", {{W, "incomplete_integral", "\\int"}}},
        {"Use $x + y$ and $x$ and $y + z$ in text.", {{K, "inconsistent_variable", "z"}}, true},
    };
}

std::string describe(const std::vector<math::MathIssue>& issues) {
    std::string out;
    for (const auto& i : issues) out += std::string(math::to_string(i.check)) + ":" + i.code + "@" + std::to_string(i.location) + " ";
    return out;
}

Outcome criterion_math() {
    const auto cases = math_fixture();
    std::set<std::string> covered;
    std::size_t agree = 0;
    std::vector<std::string> wrong;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& mc = cases[c];
        math::MathOptions options;
        options.variable_heuristic = mc.variable_heuristic;
        std::vector<math::MathIssue> expected;
        for (const auto& e : mc.expected) {
            std::size_t loc = 0;
            if (!e.anchor.empty()) {
                loc = mc.text.find(e.anchor);
                for (std::size_t k = 0; k < e.occurrence; ++k) loc = mc.text.find(e.anchor, loc + 1);
            }
            expected.push_back({e.check, e.code, loc});
            covered.insert(e.code);
        }
        // per-checker lists: each sorted by location
        auto only = [&](math::MathCheck check) {
            std::vector<math::MathIssue> out;
            for (const auto& i : expected)
                if (i.check == check) out.push_back(i);
            std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.location < b.location; });
            return out;
        };
        const bool lists_match = math::check_latex_syntax(mc.text) == only(math::MathCheck::LatexSyntax) &&
                                 math::check_wellformedness(mc.text, options) == only(math::MathCheck::WellFormed) &&
                                 math::check_consistency(mc.text, options) == only(math::MathCheck::Consistency) &&
                                 math::check_noise(mc.text, options) == only(math::MathCheck::Noise);
        std::set<math::MathCheck> failing;
        for (const auto& i : expected) failing.insert(i.check);
        const auto expected_decision = failing.size() >= 2 ? math::MathDecision::Remove : math::MathDecision::Retain;
        const auto verdict = math::validate_math(mc.text, options);
        if (lists_match && verdict.decision == expected_decision) ++agree;
        else wrong.push_back("case " + std::to_string(c + 1) + " got " + describe(verdict.issues));
    }
    static const std::vector<std::string> codes = {
        "unclosed_inline_math", "unclosed_display_math", "env_mismatch",       "unclosed_env",
        "unmatched_end",        "unbalanced_paren",      "unbalanced_bracket", "unbalanced_brace",
        "mismatched_delimiter", "left_right_mismatch",   "undefined_command",  "incomplete_sum",
        "incomplete_product",   "incomplete_integral",   "orphan_label",       "env_nesting",
        "inconsistent_variable", "placeholder",          "repeated_derivation", "formula_ratio"};
    std::size_t missing = 0;
    for (const auto& c : codes) missing += covered.contains(c) ? 0 : 1;
    std::ostringstream d;
    d << agree << "/" << cases.size() << " cases agree, " << codes.size() - missing << "/" << codes.size()
      << " issue codes covered";
    for (const auto& w : wrong) d << "; " << w;
    return {cases.size() == 40 && agree == cases.size() && missing == 0, d.str()};
}

// ---- 4. scaffold classifier -------------------------------------------------

/// Exhaustive threshold enumeration with exact fractions.
double calibration_oracle(const std::vector<double>& scores, const std::vector<bool>& labels, double floor) {
    std::set<double> cands(scores.begin(), scores.end());
    cands.insert(1.0);
    struct Row {
        double tau;
        long long tp, fp, fn;
    };
    std::vector<Row> rows;
    for (double tau : cands) {
        Row r{tau, 0, 0, 0};
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] >= tau;
            r.tp += pred && labels[i];
            r.fp += pred && !labels[i];
            r.fn += !pred && labels[i];
        }
        rows.push_back(r);
    }
    auto feasible = [&](const Row& r) {
        if (r.tp + r.fp == 0) return floor <= 0.0;
        return static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) >= floor;
    };
    // f1 = 2tp / (2tp + fp + fn); precision = tp / (tp + fp), both 0 on empty denominators
    auto f1_less = [](const Row& a, const Row& b) {
        const long long da = std::max(1LL, 2 * a.tp + a.fp + a.fn), db = std::max(1LL, 2 * b.tp + b.fp + b.fn);
        return static_cast<__int128>(2 * a.tp) * db < static_cast<__int128>(2 * b.tp) * da;
    };
    auto prec_less = [](const Row& a, const Row& b) {
        const long long da = std::max(1LL, a.tp + a.fp), db = std::max(1LL, b.tp + b.fp);
        return static_cast<__int128>(a.tp) * db < static_cast<__int128>(b.tp) * da;
    };
    const Row* best = nullptr;
    for (const auto& r : rows) {
        if (!feasible(r)) continue;
        if (!best || f1_less(*best, r) || (!f1_less(r, *best) && r.tau > best->tau)) best = &r;
    }
    if (best) return best->tau;
    for (const auto& r : rows) {
        if (!best || prec_less(*best, r) ||
            (!prec_less(r, *best) && (f1_less(*best, r) || (!f1_less(r, *best) && r.tau > best->tau))))
            best = &r;
    }
    return best->tau;
}

Outcome criterion_scaffold() {
    const auto corpus = synth::scaffold_corpus(4, 5000, 5000);
    const scaffold::LabeledCorpus train(corpus.begin(), corpus.begin() + 6000);
    const scaffold::LabeledCorpus validation(corpus.begin() + 6000, corpus.begin() + 8000);
    const scaffold::LabeledCorpus test(corpus.begin() + 8000, corpus.end());
    scaffold::TrainOptions opt;
    opt.seed = 4;
    const auto trained = scaffold::train_classifier(train, scaffold::ModelConfig{}, opt);
    const double tau = scaffold::calibrate_threshold(trained.model, validation, kPrecisionFloor, Execution::Parallel);
    const auto val = scaffold::evaluate_classifier(trained.model, tau, validation, Execution::Parallel);
    const auto held_out = scaffold::evaluate_classifier(trained.model, 0.5, test, Execution::Parallel);
    const auto held_out_tau = scaffold::evaluate_classifier(trained.model, tau, test, Execution::Parallel);

    // calibration against exhaustive enumeration on random score sets
    auto g = rng::engine(4, "acceptance.calibration");
    std::size_t sets = 0, mismatches = 0;
    const double floors[] = {0.0, 0.5, 0.8, 0.9, 0.99, 0.999, 1.0};
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = t < 3 ? 10000 : static_cast<std::size_t>(2 + g() % 400);
        const std::size_t levels = t < 3 ? 400 : 2 + g() % 60;
        std::vector<double> scores(n);
        std::vector<bool> labels(n);
        const double skill = std::uniform_real_distribution<double>(0.0, 1.0)(g);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = g() % 2 == 0;
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(g);
            const double raw = labels[i] ? skill * 0.5 + 0.5 * u : 0.5 * u + (1.0 - skill) * 0.5 * u;
            scores[i] = std::round(std::min(raw, 1.0) * static_cast<double>(levels)) / static_cast<double>(levels);
        }
        if (std::count(labels.begin(), labels.end(), true) == 0) labels[0] = true;
        if (std::count(labels.begin(), labels.end(), false) == 0) labels[0] = false;
        const double floor = floors[g() % std::size(floors)];
        ++sets;
        if (scaffold::calibrate_scores(scores, labels, floor) != calibration_oracle(scores, labels, floor)) ++mismatches;
    }

    const bool pass = held_out.accuracy >= kHeldOutAccuracy && val.precision >= kPrecisionFloor && mismatches == 0;
    std::ostringstream d;
    d << "test accuracy " << held_out.accuracy << " at 0.5, " << held_out_tau.accuracy << " at tau " << tau
      << ", validation precision " << val.precision << " recall " << val.recall << ", calibration oracle "
      << sets - mismatches << "/" << sets << " (reference 0.9696/0.9998/0.9665)";
    return {pass, d.str()};
}

// ---- 5. structural statistics direction -----------------------------------------

Outcome criterion_structure() {
    int wins = 0;
    std::ostringstream d;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto corpus = synth::scaffold_corpus(seed, 1500, 1500);
        const scaffold::LabeledCorpus train(corpus.begin(), corpus.begin() + 2000);
        const scaffold::LabeledCorpus validation(corpus.begin() + 2000, corpus.end());
        scaffold::ModelConfig config;
        config.bucket_count = 1u << 18;
        scaffold::TrainOptions opt;
        opt.seed = seed;
        auto model = scaffold::train_classifier(train, config, opt).model;
        model.tau = scaffold::calibrate_threshold(model, validation, kPrecisionFloor, Execution::Parallel);
        const auto math_docs = synth::math_corpus(seed, 400);
        const auto selected = scaffold::select_scaffolds(model, math_docs, Execution::Parallel);
        std::set<std::string> chosen;
        for (const auto& s : selected) chosen.insert(s.id);
        std::vector<Document> rejected;
        for (const auto& m : math_docs)
            if (!chosen.contains(m.id)) rejected.push_back(m);
        const auto a = scaffold::structural_stats(selected);
        const auto b = scaffold::structural_stats(rejected);
        const bool win = !selected.empty() && !rejected.empty() && a.symbol_density > b.symbol_density &&
                         a.avg_derivation_steps > b.avg_derivation_steps && a.indentation_ratio > b.indentation_ratio &&
                         a.avg_text_length > b.avg_text_length;
        wins += win ? 1 : 0;
        if (seed == 1)
            d << "seed 1: selected " << selected.size() << "/" << math_docs.size() << " symbol " << a.symbol_density
              << " vs " << b.symbol_density << ", steps " << a.avg_derivation_steps << " vs "
              << b.avg_derivation_steps << ", indent " << a.indentation_ratio << " vs " << b.indentation_ratio
              << ", length " << a.avg_text_length << " vs " << b.avg_text_length << "; ";
    }
    // one-sided sign test: P(X >= wins) for X ~ Binomial(10, 1/2)
    double p = 0.0;
    for (int k = wins; k <= 10; ++k) {
        double c = 1.0;
        for (int i = 0; i < k; ++i) c = c * (10 - i) / (i + 1);
        p += c / 1024.0;
    }
    d << wins << "/10 seeds with all four higher, sign test p=" << p;
    return {p < kSignTestAlpha, d.str()};
}

// ---- 6. mixer algebra -----------------------------------------------------------

std::string manifest_text(const std::vector<mix::ManifestEntry>& m) {
    std::string out(mix::kManifestHeader);
    out += '\n';
    for (const auto& e : m) out += mix::manifest_line(e) + '\n';
    return out;
}

Outcome criterion_mixer() {
    auto g = rng::engine(6, "acceptance.mixer");
    std::size_t plans = 0, budget_bad = 0, ratio_bad = 0, cap_bad = 0, replace_bad = 0, sample_bad = 0;
    double worst_ratio = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const std::size_t domains = 2 + g() % 7;
        std::map<std::string, std::uint64_t> available;
        std::map<std::string, double> weights;
        std::uint64_t total = 0, largest = 0;
        for (std::size_t i = 0; i < domains; ++i) {
            const std::string name = "d" + std::to_string(i);
            available[name] = 1 + g() % 5000;
            weights[name] = g() % 5 == 0 ? 0.0 : std::uniform_real_distribution<double>(0.01, 10.0)(g);
        }
        weights["d0"] = std::uniform_real_distribution<double>(0.01, 10.0)(g);
        weights["d1"] = std::uniform_real_distribution<double>(0.01, 10.0)(g);
        // leave room to ablate any single domain
        for (const auto& [name, w] : weights)
            if (w > 0.0) {
                total += available[name];
                largest = std::max(largest, available[name]);
            }
        const std::uint64_t budget = 1 + g() % (total - largest);
        const auto plan = mix::plan_mixture(available, weights, budget);
        ++plans;
        if (plan.allocated_total() != budget) ++budget_bad;
        for (const auto& [name, e] : plan.entries)
            if (e.allocated > e.available) ++cap_bad;

        // ablate a positive-weight domain
        std::vector<std::string> positive;
        for (const auto& [name, e] : plan.entries)
            if (e.weight > 0.0) positive.push_back(name);
        const auto victim = positive[g() % positive.size()];
        const auto ablated = mix::ablate_domain(plan, victim);
        if (ablated.allocated_total() != budget || ablated.entries.contains(victim)) ++budget_bad;
        for (const auto& [name, e] : ablated.entries) {
            if (e.allocated > e.available) ++cap_bad;
            for (const auto& [other, f] : ablated.entries) {
                if (name >= other || e.weight == 0.0 || f.weight == 0.0) continue;
                const double before = plan.entries.at(name).weight / plan.entries.at(other).weight;
                const double after = e.weight / f.weight;
                const double rel = std::abs(after - before) / before;
                worst_ratio = std::max(worst_ratio, rel);
                if (rel > kRatioTolerance) ++ratio_bad;
            }
        }

        // replace part of a domain
        const auto& [dom, entry] = *std::next(plan.entries.begin(), static_cast<long>(g() % plan.entries.size()));
        const double fraction = std::uniform_real_distribution<double>(0.0, 1.0)(g);
        const auto need = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(entry.allocated)));
        const std::uint64_t subset_available = need + g() % 100;
        const auto replaced = mix::replace_within_domain(plan, dom, "subset", subset_available, fraction);
        const auto& re = replaced.entries.at(dom);
        if (re.allocated != entry.allocated || replaced.allocated_total() != budget || !re.replacement ||
            re.replacement->subset_tokens != need || re.replacement->subset_tokens > re.allocated)
            ++replace_bad;

        // sampler determinism
        mix::CorpusIndex index;
        for (const auto& [name, e] : replaced.entries) {
            auto& pool = index.pools[name];
            std::uint64_t left = e.available;
            for (std::size_t k = 0; left > 0; ++k) {
                const std::uint64_t tokens = std::min<std::uint64_t>(left, 1 + g() % 300);
                pool.push_back({name + "-" + std::to_string(k), tokens, static_cast<mix::Tier>(g() % 3)});
                left -= tokens;
            }
        }
        auto& subset_pool = index.pools["subset"];
        for (std::uint64_t k = 0, left = subset_available; left > 0; ++k) {
            const std::uint64_t tokens = std::min<std::uint64_t>(left, 1 + g() % 50);
            subset_pool.push_back({"s-" + std::to_string(k), tokens, mix::Tier::High});
            left -= tokens;
        }
        const auto seed = g();
        const auto first = manifest_text(mix::sample_stream(replaced, {}, index, seed));
        const auto second = manifest_text(mix::sample_stream(replaced, {}, index, seed));
        if (first != second) ++sample_bad;
    }
    std::ostringstream d;
    d << plans << " plans: budget violations " << budget_bad << ", cap violations " << cap_bad << ", ratio violations "
      << ratio_bad << " (worst " << worst_ratio << "), replace violations " << replace_bad << ", sampler mismatches "
      << sample_bad;
    return {budget_bad == 0 && cap_bad == 0 && ratio_bad == 0 && replace_bad == 0 && sample_bad == 0, d.str()};
}

// ---- 7. router simulator --------------------------------------------------------

Outcome criterion_router() {
    const auto start = Clock::now();
    bool pass = true;
    std::ostringstream d;

    const std::uint64_t tw = 500;
    const bool schedule = router::warmup_coefficient(0, tw) == 0.0 && router::warmup_coefficient(tw / 2, tw) == 0.5 &&
                          router::warmup_coefficient(tw, tw) == 1.0 && router::warmup_coefficient(2 * tw, tw) == 1.0;
    pass &= schedule;

    auto g = rng::engine(7, "acceptance.router");
    std::normal_distribution<double> normal;
    bool identity = true;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> s(64);
        for (auto& x : s) x = normal(g) * 10.0;
        router::RunningStats stats{normal(g), 1.0 + std::abs(normal(g)), true};
        identity &= router::perturb_logits(s, 1.0, stats, static_cast<std::uint64_t>(t)) == s;
    }
    pass &= identity;

    const std::vector<double> s = {2.0, 1.0, 0.0, -1.0};
    const auto probs = router::score(s, router::ScoreFn::Softmax);
    double denom = 0.0;
    for (double x : s) denom += std::exp(x);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(probs[i] - std::exp(s[i]) / denom));
    router::GateConfig four;
    four.experts = 4;
    four.top_k = 4;
    const auto gates = router::gate_from_logits(s, four);
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(gates.gates[i] - std::exp(s[i]) / denom));
    const bool softmax_ok = worst <= kSoftmaxTolerance;
    pass &= softmax_ok;

    int wins = 0;
    double mean_with = 0.0, mean_without = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto params = router::RouterParams::random(32, 64, seed);
        params.bias[0] = 4.0;
        router::SimulationOptions opt;
        opt.steps = 1000;
        opt.tokens_per_step = 64;
        opt.input_seed = seed;
        opt.noise_seed = seed + 1000;
        opt.execution = Execution::Parallel;
        router::GateConfig warm;
        warm.warmup_steps = tw;
        router::GateConfig cold = warm;
        cold.warmup_steps = 0;
        auto early_load = [&](const router::GateConfig& cfg) {
            const auto trace = router::simulate_routing(cfg, params, opt);
            double sum = 0.0;
            int n = 0;
            for (const auto& st : trace.steps)
                if (st.step >= 1 && st.step <= 100) {
                    sum += st.max_load_fraction;
                    ++n;
                }
            return sum / n;
        };
        const double with = early_load(warm);
        const double without = early_load(cold);
        mean_with += with / 20.0;
        mean_without += without / 20.0;
        if (without - with > 0.0) ++wins;
    }
    const double secs = seconds_since(start);
    pass &= wins >= kWarmupWinsRequired && secs < kRouterSeconds;
    d << "schedule " << (schedule ? "exact" : "wrong") << ", identity " << (identity ? "exact" : "broken")
      << ", softmax error " << worst << " (" << probs[0] << ", " << probs[1] << "), warmup wins " << wins
      << "/20 (mean early max load " << mean_with << " vs " << mean_without << "), " << secs << " s";
    return {pass, d.str()};
}

// ---- 8. JS divergence -------------------------------------------------------------

std::vector<double> random_distribution(std::mt19937_64& g, std::size_t n) {
    std::gamma_distribution<double> gamma(0.5, 1.0);
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& x : p) {
        x = g() % 5 == 0 ? 0.0 : gamma(g);
        sum += x;
    }
    if (sum == 0.0) {
        p[0] = 1.0;
        return p;
    }
    for (auto& x : p) x /= sum;
    return p;
}

Outcome criterion_js() {
    auto g = rng::engine(8, "acceptance.js");
    std::size_t violations = 0;
    for (int t = 0; t < 10000; ++t) {
        const std::size_t n = 2 + g() % 63;
        const auto p = random_distribution(g, n);
        const auto q = random_distribution(g, n);
        const double pq = routing::js_divergence(p, q);
        const double qp = routing::js_divergence(q, p);
        if (!(pq >= 0.0 && pq <= 1.0) || std::abs(pq - qp) > 1e-12 || routing::js_divergence(p, p) > 1e-12) ++violations;
    }
    const double disjoint = routing::js_divergence({1.0, 0.0}, {0.0, 1.0});
    const double half = routing::js_divergence({1.0, 0.0}, {0.5, 0.5});
    // two-term KL against the midpoint (0.75, 0.25)
    const double kl_p = 1.0 * std::log2(1.0 / 0.75);
    const double kl_q = 0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25);
    const double reference = 0.5 * kl_p + 0.5 * kl_q;

    std::vector<routing::RoutingDistribution> dists;
    for (int i = 0; i < 24; ++i) dists.push_back({"c" + std::to_string(i), "all", random_distribution(g, 64)});
    std::size_t matrix_bad = 0;
    for (const auto exec : {Execution::Serial, Execution::Parallel}) {
        const auto m = routing::pairwise_js(dists, exec);
        for (std::size_t i = 0; i < dists.size(); ++i)
            for (std::size_t j = 0; j < dists.size(); ++j) {
                const double want = i == j ? 0.0 : routing::js_divergence(dists[std::min(i, j)].probs, dists[std::max(i, j)].probs);
                if (m[i][j] != want) ++matrix_bad;
            }
    }
    const bool pass = violations == 0 && disjoint == 1.0 && std::abs(half - 0.3113) <= kJsReferenceTolerance &&
                      std::abs(half - reference) <= kJsReferenceTolerance && matrix_bad == 0;
    std::ostringstream d;
    d.precision(10);
    d << "property violations " << violations << "/10000, JS(disjoint)=" << disjoint << ", JS([1,0],[.5,.5])=" << half
      << " vs two-term KL " << reference << ", matrix mismatches " << matrix_bad;
    return {pass, d.str()};
}

// ---- 9. end-to-end determinism ------------------------------------------------------

void write_docs(const fs::path& path, const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& d : docs) out << serialize_document(d) << '\n';
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct PipelineRun {
    bool ok = true;
    std::string failure;
    std::map<std::string, std::string> outputs;
};

PipelineRun run_pipeline(const fs::path& dir) {
    PipelineRun result;
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return (dir / name).string(); };

    write_docs(p("corpus.jsonl"), synth::pipeline_corpus(9, 1000));
    std::vector<Document> pos, neg, val;
    for (auto& ex : synth::scaffold_corpus(9, 500, 500)) {
        ex.doc.structured = ex.structured;
        (val.size() < 300 ? val : ex.structured ? pos : neg).push_back(ex.doc);
    }
    write_docs(p("positives.jsonl"), pos);
    write_docs(p("negatives.jsonl"), neg);
    write_docs(p("validation.jsonl"), val);

    std::ostringstream out, err;
    auto step = [&](std::vector<std::string> args) {
        if (!result.ok) return;
        args.insert(args.begin(), {"--seed", "7"});
        const int code = cli::run(args, out, err);
        if (code != 0) {
            result.ok = false;
            result.failure = args[2] + " exited " + std::to_string(code) + ": " + err.str();
        }
    };
    step({"classify-domain", "--input", p("corpus.jsonl"), "--annotate", p("annotated.jsonl"), "--out", p("domains.tsv")});
    step({"filter-code", "--input", p("annotated.jsonl"), "--domain-scope", "--kept", p("code_kept.jsonl"), "--out",
          p("code_report.tsv")});
    step({"validate-math", "--input", p("code_kept.jsonl"), "--domain-scope", "--kept", p("clean.jsonl"), "--out",
          p("math_report.tsv")});
    step({"train-scaffold", "--positives", p("positives.jsonl"), "--negatives", p("negatives.jsonl"), "--model",
          p("model.bin"), "--buckets", "65536", "--loss-out", p("loss.tsv")});
    step({"calibrate", "--model", p("model.bin"), "--validation", p("validation.jsonl"), "--out", p("calibrated.bin"),
          "--report", p("calibration.txt")});
    step({"select-scaffolds", "--model", p("calibrated.bin"), "--input", p("clean.jsonl"), "--domain-scope", "--out",
          p("scaffolds.jsonl"), "--rejected", p("rejected.jsonl")});
    if (!result.ok) return result;

    std::map<std::string, std::uint64_t> tokens;
    for (const auto& d : read_documents_file(p("clean.jsonl")).documents)
        if (d.domain) tokens[std::string(to_string(*d.domain))] += count_tokens(d.text);
    std::uint64_t total = 0;
    std::vector<std::string> plan_args = {"mix-plan", "--input", p("clean.jsonl"), "--out", p("plan.json")};
    for (const auto& [name, n] : tokens) {
        plan_args.push_back("--weights");
        plan_args.push_back(name + "=1");
        total += n;
    }
    plan_args.push_back("--budget");
    plan_args.push_back(std::to_string(total / 4));
    step(plan_args);
    if (!result.ok) return result;
    std::uint64_t scaffold_tokens = 0;
    for (const auto& d : read_documents_file(p("scaffolds.jsonl")).documents) scaffold_tokens += count_tokens(d.text);
    const auto math_allocated = mix::plan_from_json(slurp(p("plan.json"))).entries.at("math").allocated;
    std::ostringstream fraction;
    fraction << std::min(0.5, 0.8 * static_cast<double>(scaffold_tokens) / static_cast<double>(math_allocated));
    step({"replace", "--plan", p("plan.json"), "--domain", "math", "--subset", "scaffolds", "--subset-input",
          p("scaffolds.jsonl"), "--fraction", fraction.str(), "--out", p("plan_replaced.json")});
    step({"sample", "--plan", p("plan_replaced.json"), "--input", p("clean.jsonl"), "--subset",
          "scaffolds=" + p("scaffolds.jsonl"), "--out", p("manifest.tsv")});
    if (!result.ok) return result;

    for (const auto& name : {"annotated.jsonl", "domains.tsv", "code_kept.jsonl", "code_report.tsv", "clean.jsonl",
                             "math_report.tsv", "model.bin", "loss.tsv", "calibrated.bin", "calibration.txt",
                             "scaffolds.jsonl", "rejected.jsonl", "plan.json", "plan_replaced.json", "manifest.tsv"})
        result.outputs[name] = slurp(dir / name);
    result.outputs["stderr"] = err.str();
    return result;
}

Outcome criterion_determinism() {
    const auto root = fs::temp_directory_path() / ("curate_acceptance_" + std::to_string(::getpid()));
    auto start = Clock::now();
    const auto a = run_pipeline(root / "a");
    const double secs_a = seconds_since(start);
    start = Clock::now();
    const auto b = run_pipeline(root / "b");
    const double secs = std::max(secs_a, seconds_since(start));
    std::ostringstream d;
    if (!a.ok || !b.ok) {
        fs::remove_all(root);
        return {false, "pipeline failed: " + (a.ok ? b.failure : a.failure)};
    }
    std::size_t differing = 0;
    std::string first_diff;
    for (const auto& [name, content] : a.outputs) {
        if (name == "stderr") continue;
        if (b.outputs.at(name) != content) {
            ++differing;
            if (first_diff.empty()) first_diff = name;
        }
    }
    const auto manifest_lines = std::count(a.outputs.at("manifest.tsv").begin(), a.outputs.at("manifest.tsv").end(), '\n');
    const auto scaffold_lines = std::count(a.outputs.at("scaffolds.jsonl").begin(), a.outputs.at("scaffolds.jsonl").end(), '\n');
    d << a.outputs.size() - 1 << " outputs compared, " << differing << " differ" << (first_diff.empty() ? "" : " (" + first_diff + ")")
      << ", manifest rows " << manifest_lines - 1 << ", scaffolds " << scaffold_lines << ", slowest run " << secs << " s";
    fs::remove_all(root);
    return {differing == 0 && manifest_lines > 1 && secs < kPipelineSeconds, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    // optional criterion numbers restrict the run
    std::set<std::size_t> only;
    for (int i = 1; i < argc; ++i) only.insert(static_cast<std::size_t>(std::stoul(argv[i])));
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"filter-rule fixtures", criterion_filter_fixture},
        {"dedup oracle", criterion_dedup},
        {"math validator fixture", criterion_math},
        {"scaffold classifier", criterion_scaffold},
        {"structural statistics direction", criterion_structure},
        {"mixer algebra", criterion_mixer},
        {"router simulator", criterion_router},
        {"js divergence", criterion_js},
        {"end-to-end determinism", criterion_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.contains(i + 1)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
