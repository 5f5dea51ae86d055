#include "curate/batch.hpp"

#include <omp.h>

namespace curate {

void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

std::vector<FilterReport> filter_code_batch(const std::vector<Document>& docs, const code::RuleRegistry& registry,
                                                  code::DedupIndex& index, const code::PipelineOptions& options,
                                                  Execution exec) {
    auto outcomes = map_indices(docs.size(), exec, [&](std::size_t i) -> std::optional<code::RuleOutcome> {
        const auto& doc = docs[i];
        const auto* rules = doc.language_hint ? registry.resolve(*doc.language_hint) : nullptr;
        if (rules == nullptr) return std::nullopt;
        return code::evaluate_rules(doc, *rules, options);
    });
    std::vector<FilterReport> reports;
    reports.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!outcomes[i]) reports.push_back(code::unknown_language_report(docs[i]));
        else reports.push_back(code::apply_dedup(std::move(*outcomes[i]), index));
    }
    return reports;
}

std::vector<math::MathVerdict> validate_math_batch(const std::vector<Document>& docs, const math::MathOptions& options,
                                                   Execution exec) {
    return map_indices(docs.size(), exec, [&](std::size_t i) { return math::validate_math(docs[i].text, options); });
}

std::vector<DomainResult> classify_domain_batch(const std::vector<Document>& docs, domain::DomainOptions options,
                                                Execution exec, std::size_t boilerplate_min_documents) {
    domain::BoilerplateIndex boilerplate(boilerplate_min_documents);
    if (options.boilerplate == nullptr) {
        for (const auto& d : docs) boilerplate.add_document(d.text);
        options.boilerplate = &boilerplate;
    }
    return map_indices(docs.size(), exec, [&](std::size_t i) {
        const auto density = domain::document_density(docs[i], options).density;
        return DomainResult{domain::categorize_domain(docs[i], options), density};
    });
}

}  // namespace curate
