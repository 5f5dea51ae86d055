#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/document.hpp"

namespace curate::mix {

enum class Tier { High, Medium, Low, Excluded };

std::string_view to_string(Tier t);
Tier parse_tier(std::string_view s);

/// Half-open score bands: [admit, mid) Low, [mid, high) Medium, >= high High.
struct TierCutoffs {
    double admit = 0.0;
    double mid = 0.5;
    double high = 0.8;

    /// Throws ConfigError unless 0 <= admit <= mid <= high <= 1.
    void validate() const;
};

/// Documents without a quality score are Excluded.
Tier assign_tier(const Document& doc, const TierCutoffs& cutoffs);

struct TierAssignment {
    std::string doc_id;
    Tier tier;
};

std::vector<TierAssignment> stratify(const std::vector<Document>& docs, const TierCutoffs& cutoffs);

/// Part of a domain's allocation drawn from a designated subset pool.
struct Replacement {
    std::string subset;
    double fraction = 0.0;
    std::uint64_t subset_available = 0;
    /// round(fraction * allocated).
    std::uint64_t subset_tokens = 0;
};

struct MixtureEntry {
    std::uint64_t available = 0;
    /// Normalized target weight.
    double weight = 0.0;
    std::uint64_t allocated = 0;
    std::optional<Replacement> replacement;
};

struct MixturePlan {
    std::uint64_t total_budget = 0;
    std::map<std::string, MixtureEntry> entries;
    std::map<std::string, TierCutoffs> cutoffs;

    std::uint64_t allocated_total() const;
};

/// Normalizes weights, allocates budget * w per domain, caps domains at their
/// availability and redistributes the excess among the rest until nothing
/// exceeds availability, then rounds with largest remainders (ties by name).
/// Throws ConfigError on bad weights or a zero budget, InfeasibleError when
/// availability is short or a positive-weight domain has no tokens.
MixturePlan plan_mixture(const std::map<std::string, std::uint64_t>& available,
                         const std::map<std::string, double>& weights, std::uint64_t budget);

/// Drops a domain and re-plans the same budget with the remaining weights renormalized.
/// Replacements elsewhere keep their fraction.
MixturePlan ablate_domain(const MixturePlan& plan, const std::string& domain);

/// Sources `fraction` of a domain's allocation from a subset pool; the total is unchanged.
MixturePlan replace_within_domain(const MixturePlan& plan, const std::string& domain, const std::string& subset,
                                  std::uint64_t subset_available, double fraction);

struct TierWeights {
    double high = 4.0;
    double medium = 2.0;
    double low = 1.0;

    double of(Tier t) const;
};

struct IndexedDoc {
    std::string id;
    std::uint64_t tokens = 0;
    Tier tier = Tier::Low;
};

/// Documents per pool. A pool is a domain name or a replacement subset name.
struct CorpusIndex {
    std::map<std::string, std::vector<IndexedDoc>> pools;
};

struct ManifestEntry {
    std::string doc_id;
    std::string domain;
    /// Pool the document came from: the domain itself or a replacement subset.
    std::string source;
    Tier tier;
    std::uint64_t tokens;
};

struct SampleOptions {
    /// Passes over a pool before an unfilled allocation is an error.
    std::uint32_t max_epochs = 1;
};

/// Per pool, draws documents without replacement in weighted random order
/// (key -log(u)/w per document, u from the pool's substream) until the
/// allocation is filled; the last document is truncated to fit. Domains are
/// emitted in name order, the original pool before the subset pool.
/// Throws InfeasibleError when a pool runs out.
std::vector<ManifestEntry> sample_stream(const MixturePlan& plan, const TierWeights& tier_weights,
                                         const CorpusIndex& index, std::uint64_t seed, const SampleOptions& options = {});

std::string plan_to_json(const MixturePlan& plan);
/// Throws ConfigError on malformed plans.
MixturePlan plan_from_json(std::string_view json_text);

inline constexpr std::string_view kManifestHeader = "doc_id\tdomain\tsource\ttier\ttokens";
std::string manifest_line(const ManifestEntry& e);

}  // namespace curate::mix
