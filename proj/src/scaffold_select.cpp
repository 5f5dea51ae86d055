#include "curate/scaffold_select.hpp"

#include <algorithm>
#include <numeric>
#include <regex>

#include "curate/error.hpp"
#include "curate/text.hpp"

namespace curate::scaffold {

namespace {

/// a/b compared with c/d for non-negative fractions with positive denominators.
int compare_fractions(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    const auto lhs = static_cast<unsigned __int128>(a) * d;
    const auto rhs = static_cast<unsigned __int128>(c) * b;
    return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
}

struct Candidate {
    double tau;
    std::uint64_t tp, fp, fn;

    // precision tp/(tp+fp), 0/1 when nothing is predicted positive
    std::uint64_t p_num() const { return tp; }
    std::uint64_t p_den() const { return tp + fp == 0 ? 1 : tp + fp; }
    // F1 = 2tp / (2tp + fp + fn), 0/1 when the denominator vanishes
    std::uint64_t f_num() const { return 2 * tp; }
    std::uint64_t f_den() const { return 2 * tp + fp + fn == 0 ? 1 : 2 * tp + fp + fn; }
};

}  // namespace

ClassifierMetrics metrics_at(const std::vector<double>& scores, const std::vector<bool>& labels, double tau) {
    if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
    ClassifierMetrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= tau;
        if (predicted && labels[i]) ++m.tp;
        else if (predicted) ++m.fp;
        else if (labels[i]) ++m.fn;
        else ++m.tn;
    }
    const auto total = m.tp + m.fp + m.tn + m.fn;
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    m.accuracy = ratio(m.tp + m.tn, total);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

double calibrate_scores(const std::vector<double>& scores, const std::vector<bool>& labels, double precision_floor) {
    if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
    const auto positives = static_cast<std::uint64_t>(std::count(labels.begin(), labels.end(), true));
    if (positives == 0 || positives == labels.size())
        throw ConfigError("calibration set needs both structured and unstructured examples");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    // sweep thresholds from high to low; 1.0 first
    std::vector<Candidate> candidates;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::size_t k = 0;
    auto absorb_at_least = [&](double tau) {
        while (k < order.size() && scores[order[k]] >= tau) {
            if (labels[order[k]]) ++tp;
            else ++fp;
            ++k;
        }
    };
    absorb_at_least(1.0);
    candidates.push_back({1.0, tp, fp, positives - tp});
    while (k < order.size()) {
        const double tau = scores[order[k]];
        absorb_at_least(tau);
        if (tau != 1.0) candidates.push_back({tau, tp, fp, positives - tp});
    }

    auto meets_floor = [&](const Candidate& c) {
        if (c.tp + c.fp == 0) return precision_floor <= 0.0;
        return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) >= precision_floor;
    };

    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
        if (!meets_floor(c)) continue;
        if (best == nullptr) {
            best = &c;
            continue;
        }
        const int f = compare_fractions(c.f_num(), c.f_den(), best->f_num(), best->f_den());
        if (f > 0 || (f == 0 && c.tau > best->tau)) best = &c;
    }
    if (best != nullptr) return best->tau;

    for (const auto& c : candidates) {
        if (best == nullptr) {
            best = &c;
            continue;
        }
        const int p = compare_fractions(c.p_num(), c.p_den(), best->p_num(), best->p_den());
        const int f = compare_fractions(c.f_num(), c.f_den(), best->f_num(), best->f_den());
        if (p > 0 || (p == 0 && (f > 0 || (f == 0 && c.tau > best->tau)))) best = &c;
    }
    return best->tau;
}

std::vector<double> score_documents(const ScaffoldModel& model, const std::vector<Document>& docs, Execution exec) {
    return map_indices(docs.size(), exec, [&](std::size_t i) { return model.score(docs[i].text); });
}

namespace {

std::pair<std::vector<double>, std::vector<bool>> score_labeled(const ScaffoldModel& model, const LabeledCorpus& corpus,
                                                                Execution exec) {
    auto scores = map_indices(corpus.size(), exec, [&](std::size_t i) { return model.score(corpus[i].doc.text); });
    std::vector<bool> labels(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) labels[i] = corpus[i].structured;
    return {std::move(scores), std::move(labels)};
}

}  // namespace

double calibrate_threshold(const ScaffoldModel& model, const LabeledCorpus& validation, double precision_floor,
                           Execution exec) {
    if (!(precision_floor >= 0.0 && precision_floor <= 1.0)) throw ConfigError("precision floor must be in [0, 1]");
    const auto [scores, labels] = score_labeled(model, validation, exec);
    return calibrate_scores(scores, labels, precision_floor);
}

ClassifierMetrics evaluate_classifier(const ScaffoldModel& model, double tau, const LabeledCorpus& labeled,
                                      Execution exec) {
    if (labeled.empty()) throw ConfigError("evaluation set is empty");
    const auto [scores, labels] = score_labeled(model, labeled, exec);
    return metrics_at(scores, labels, tau);
}

std::vector<Document> select_scaffolds(const ScaffoldModel& model, const std::vector<Document>& math_docs,
                                       Execution exec) {
    if (!model.tau) throw ConfigError("model threshold is not calibrated");
    const auto scores = score_documents(model, math_docs, exec);
    std::vector<Document> out;
    for (std::size_t i = 0; i < math_docs.size(); ++i)
        if (scores[i] >= *model.tau) out.push_back(math_docs[i]);
    return out;
}

namespace {

bool search(std::string_view s, const std::regex& re) { return std::regex_search(s.begin(), s.end(), re); }

const std::regex& type_statement() {
    static const std::regex re(
        R"((^|\n)[ \t]*(int|void|char|float|double|bool|long|short|unsigned|auto|string|String|static|public|private|const)[ \t]+[A-Za-z_]\w*[ \t]*[(=;\[])");
    return re;
}

const std::regex& keyword() {
    static const std::regex re(
        R"((int main\s*\(|\bdef \w+\(|#include|#define|\bprintf\s*\(|System\.out|console\.log|public static|\belif\b|\bfunction\s*\w*\s*\(|^\s*import\s+[\w.]+;?\s*$|\breturn\s+[\w\[\](),.]*;|\bstd::|\bnullptr\b|\bself\.))",
        std::regex::multiline);
    return re;
}

const std::regex& file_extension() {
    static const std::regex re(R"(\b[\w-]+\.(py|js|ts|java|cpp|cc|hpp|h|c|rs|go|rb|php|cs|swift|kt|sh|ipynb)\b)");
    return re;
}

bool has_fence(std::string_view s) {
    for (auto line : text::split_lines(s)) {
        const auto t = text::trim(line);
        if (t.starts_with("```") || t.starts_with("~~~")) return true;
    }
    return false;
}

bool has_markdown(std::string_view s) {
    if (has_fence(s)) return true;
    static const std::regex re(R"((^|\n)#{1,6} \S|\*\*\S[^*\n]*\*\*|`[^`\n]+`|\]\(https?:|(^|\n)\s*\|?\s*:?-{3,}:?\s*\|)");
    return search(s, re);
}

bool has_indented_block(std::string_view s) {
    std::size_t run = 0;
    for (auto line : text::split_lines(s)) {
        const bool indented = !text::is_blank(line) && (line.starts_with("    ") || line.starts_with("\t"));
        run = indented ? run + 1 : 0;
        if (run >= 2) return true;
    }
    return false;
}

bool has_grouped_operator(std::string_view s) {
    static const std::regex re(R"(\{\s*\}|&&|\|\||==|!=|->|=>|\+\+|<<|>>|\+=|-=)");
    return search(s, re);
}

}  // namespace

std::vector<std::string> code_pattern_hits(std::string_view text) {
    std::vector<std::string> hits;
    if (text.find('=') != std::string_view::npos || text.find("::") != std::string_view::npos)
        hits.emplace_back("code_symbol");
    if (search(text, type_statement())) hits.emplace_back("type_statement");
    if (has_indented_block(text)) hits.emplace_back("indented_block");
    if (has_grouped_operator(text)) hits.emplace_back("grouped_operator");
    if (search(text, keyword())) hits.emplace_back("keyword");
    if (search(text, file_extension())) hits.emplace_back("file_extension");
    if (has_markdown(text)) hits.emplace_back("markdown");
    return hits;
}

std::vector<Document> build_negative_pool(const std::vector<Document>& web_docs) {
    std::vector<Document> out;
    for (const auto& d : web_docs)
        if (code_pattern_hits(d.text).empty()) out.push_back(d);
    return out;
}

std::vector<std::string> contamination_hits(std::string_view text) {
    std::vector<std::string> hits;
    if (text.find("::") != std::string_view::npos || search(text, type_statement())) hits.emplace_back("code_symbol");
    static const std::regex braces(R"(\{\s*\}\s*$|;\s*\n\s*\}|&&|\|\|)", std::regex::multiline);
    if (search(text, braces)) hits.emplace_back("grouped_operator");
    if (search(text, keyword())) hits.emplace_back("keyword");
    if (search(text, file_extension())) hits.emplace_back("file_extension");
    static const std::regex html(R"(</?(div|span|p|br|a|table|tr|td|script|style|html|body|img|ul|li|pre|code)\b[^>]*>)",
                                 std::regex::icase);
    if (search(text, html)) hits.emplace_back("html_tag");
    if (has_fence(text)) hits.emplace_back("markdown_fence");
    return hits;
}

AuditReport contamination_audit(const std::vector<Document>& selected) {
    AuditReport report;
    report.checked = selected.size();
    for (const auto& d : selected) {
        auto reasons = contamination_hits(d.text);
        if (!reasons.empty()) report.flagged.push_back({d.id, std::move(reasons)});
    }
    return report;
}

StructuralStats document_stats(std::string_view s) {
    StructuralStats st;
    std::size_t chars = 0;
    std::size_t symbols = 0;
    for (std::size_t i = 0; i < s.size();) {
        const auto cp = text::next_code_point(s, i);
        ++chars;
        if (cp == 0x2212 || (cp < 0x80 && std::string_view("=+-*/^_<>\\$()[]{}").find(static_cast<char>(cp)) !=
                                              std::string_view::npos))
            ++symbols;
    }
    static constexpr std::string_view relations[] = {"=",           "\xE2\x89\xA4", "\xE2\x89\xA5", "\xE2\x86\x92",
                                                     "\xE2\x87\x92", "\\le",        "\\ge",         "\\to",
                                                     "\\Rightarrow", "\\implies"};
    std::size_t steps = 0;
    std::size_t non_empty = 0;
    std::size_t indented = 0;
    for (auto line : text::split_lines(s)) {
        for (auto r : relations)
            if (line.find(r) != std::string_view::npos) {
                ++steps;
                break;
            }
        if (text::is_blank(line)) continue;
        ++non_empty;
        if (line[0] == ' ' || line[0] == '\t') ++indented;
    }
    st.symbol_density = chars == 0 ? 0.0 : static_cast<double>(symbols) / static_cast<double>(chars);
    st.avg_derivation_steps = static_cast<double>(steps);
    st.indentation_ratio = non_empty == 0 ? 0.0 : static_cast<double>(indented) / static_cast<double>(non_empty);
    st.avg_text_length = static_cast<double>(chars);
    return st;
}

StructuralStats structural_stats(const std::vector<Document>& docs) {
    StructuralStats sum;
    for (const auto& d : docs) {
        const auto st = document_stats(d.text);
        sum.symbol_density += st.symbol_density;
        sum.avg_derivation_steps += st.avg_derivation_steps;
        sum.indentation_ratio += st.indentation_ratio;
        sum.avg_text_length += st.avg_text_length;
    }
    if (docs.empty()) return sum;
    const auto n = static_cast<double>(docs.size());
    sum.symbol_density /= n;
    sum.avg_derivation_steps /= n;
    sum.indentation_ratio /= n;
    sum.avg_text_length /= n;
    return sum;
}

}  // namespace curate::scaffold
