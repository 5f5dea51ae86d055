#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/document.hpp"
#include "curate/parallel.hpp"
#include "curate/scaffold_model.hpp"

namespace curate::scaffold {

struct ClassifierMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double accuracy = 0.0;
    /// 0 when nothing is predicted positive.
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Metrics for "predict structured iff score >= tau".
ClassifierMetrics metrics_at(const std::vector<double>& scores, const std::vector<bool>& labels, double tau);

/// Among the observed scores and 1.0, the tau with maximal F1 subject to
/// precision >= floor (ties: larger tau). When no candidate meets the floor,
/// the tau with maximal precision, then higher F1, then larger tau.
/// Throws ConfigError unless both classes are present.
double calibrate_scores(const std::vector<double>& scores, const std::vector<bool>& labels, double precision_floor);

std::vector<double> score_documents(const ScaffoldModel& model, const std::vector<Document>& docs,
                                    Execution exec = Execution::Serial);

double calibrate_threshold(const ScaffoldModel& model, const LabeledCorpus& validation, double precision_floor = 0.999,
                           Execution exec = Execution::Serial);

ClassifierMetrics evaluate_classifier(const ScaffoldModel& model, double tau, const LabeledCorpus& labeled,
                                      Execution exec = Execution::Serial);

/// Documents with score >= model.tau, in input order. Throws ConfigError when tau is unset.
std::vector<Document> select_scaffolds(const ScaffoldModel& model, const std::vector<Document>& math_docs,
                                       Execution exec = Execution::Serial);

/// Names of the code-like patterns found in a web document: code_symbol,
/// type_statement, indented_block, grouped_operator, keyword, file_extension, markdown.
std::vector<std::string> code_pattern_hits(std::string_view text);

/// Web documents matching none of the code_pattern_hits heuristics.
std::vector<Document> build_negative_pool(const std::vector<Document>& web_docs);

struct AuditFlag {
    std::string doc_id;
    std::vector<std::string> reasons;
};

struct AuditReport {
    std::size_t checked = 0;
    std::vector<AuditFlag> flagged;
};

/// Residual code and formatting artifacts in selected scaffolds. Uses the
/// patterns that do not also describe mathematical notation (keywords, file
/// extensions, type statements, "::", "{}") plus HTML tags and Markdown fences.
std::vector<std::string> contamination_hits(std::string_view text);
AuditReport contamination_audit(const std::vector<Document>& selected);

/// Version tag of the structural statistic definitions, written in report headers.
inline constexpr std::string_view kStatsVersion = "structural-stats-v1";

struct StructuralStats {
    double symbol_density = 0.0;
    double avg_derivation_steps = 0.0;
    double indentation_ratio = 0.0;
    double avg_text_length = 0.0;
};

/// Per-document statistics, all lengths in code points.
StructuralStats document_stats(std::string_view text);
/// Mean of document_stats; all zero for no documents.
StructuralStats structural_stats(const std::vector<Document>& docs);

}  // namespace curate::scaffold
