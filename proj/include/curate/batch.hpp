#pragma once

#include <vector>

#include "curate/code_filter.hpp"
#include "curate/dedup_index.hpp"
#include "curate/document.hpp"
#include "curate/domain_classifier.hpp"
#include "curate/math_validator.hpp"
#include "curate/parallel.hpp"

namespace curate {

/// Rule stages fan out across documents; deduplication then runs in input
/// order, so the reports match a sequential run exactly.
std::vector<FilterReport> filter_code_batch(const std::vector<Document>& docs, const code::RuleRegistry& registry,
                                                  code::DedupIndex& index, const code::PipelineOptions& options = {},
                                                  Execution exec = Execution::Serial);

std::vector<math::MathVerdict> validate_math_batch(const std::vector<Document>& docs,
                                                   const math::MathOptions& options = {},
                                                   Execution exec = Execution::Serial);

struct DomainResult {
    DomainLabel label;
    double density;
};

/// Builds the corpus-wide boilerplate index first (unless options already carry one),
/// then labels each document.
std::vector<DomainResult> classify_domain_batch(const std::vector<Document>& docs, domain::DomainOptions options = {},
                                                Execution exec = Execution::Serial,
                                                std::size_t boilerplate_min_documents = 5);

}  // namespace curate
