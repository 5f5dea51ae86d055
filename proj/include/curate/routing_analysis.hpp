#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "curate/parallel.hpp"

namespace curate::routing {

struct RoutingDistribution {
    std::string config_id;
    std::string domain;
    std::vector<double> probs;
};

/// probs = counts / sum(counts). Throws NumericError when the total is zero.
RoutingDistribution aggregate_distribution(const std::vector<std::uint64_t>& counts, std::string config_id = {},
                                           std::string domain = {});

struct DeviationReport {
    /// dist - baseline per expert.
    std::vector<double> delta;
    /// All experts by descending |delta|, ties to the lower index.
    std::vector<std::size_t> ranked;
    /// First min(k, N) of ranked.
    std::vector<std::size_t> top;
};

/// Throws NumericError when the distributions differ in length.
DeviationReport deviation_report(const RoutingDistribution& dist, const RoutingDistribution& baseline, std::size_t k);

/// Tolerance on sum(P) = 1 accepted by js_divergence.
inline constexpr double kNormTolerance = 1e-9;

/// 1/2 KL(P||M) + 1/2 KL(Q||M), M = (P+Q)/2, base 2. Throws NumericError on
/// unequal lengths, negative entries or sums off 1 by more than kNormTolerance.
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

/// Symmetric matrix with zero diagonal; rows computed concurrently in parallel mode.
std::vector<std::vector<double>> pairwise_js(const std::vector<RoutingDistribution>& dists,
                                             Execution exec = Execution::Serial);

/// Mean of the present scores. Throws ConfigError when none is present.
double aggregate_capability_score(const std::vector<std::optional<double>>& scores);

/// Reads "config_id<TAB>domain<TAB>expert_id<TAB>count" rows (optional header
/// starting with "config_id"). Distributions come out sorted by (config_id, domain),
/// all sized to the largest expert id + 1. Throws ParseError with a line number.
std::vector<RoutingDistribution> read_routing_counts(std::istream& in);

}  // namespace curate::routing
