#include "curate/routing_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "curate/error.hpp"
#include "curate/text.hpp"

namespace curate::routing {

RoutingDistribution aggregate_distribution(const std::vector<std::uint64_t>& counts, std::string config_id,
                                           std::string domain) {
    const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (total == 0) throw NumericError("routing counts sum to zero");
    RoutingDistribution d{std::move(config_id), std::move(domain), {}};
    d.probs.reserve(counts.size());
    for (auto c : counts) d.probs.push_back(static_cast<double>(c) / static_cast<double>(total));
    return d;
}

DeviationReport deviation_report(const RoutingDistribution& dist, const RoutingDistribution& baseline, std::size_t k) {
    if (dist.probs.size() != baseline.probs.size()) throw NumericError("distributions differ in expert count");
    DeviationReport r;
    const auto n = dist.probs.size();
    r.delta.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.delta[i] = dist.probs[i] - baseline.probs[i];
    r.ranked.resize(n);
    std::iota(r.ranked.begin(), r.ranked.end(), std::size_t{0});
    std::stable_sort(r.ranked.begin(), r.ranked.end(),
                     [&](auto a, auto b) { return std::fabs(r.delta[a]) > std::fabs(r.delta[b]); });
    r.top.assign(r.ranked.begin(), r.ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, n)));
    return r;
}

namespace {

void check_distribution(const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw NumericError("distribution has a negative or non-finite entry");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kNormTolerance) throw NumericError("distribution is not normalized");
}

double kl_to_mid(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        const double m = 0.5 * (p[i] + q[i]);
        kl += p[i] * std::log2(p[i] / m);
    }
    return kl;
}

}  // namespace

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw NumericError("distributions differ in length");
    check_distribution(p);
    check_distribution(q);
    const double js = 0.5 * kl_to_mid(p, q) + 0.5 * kl_to_mid(q, p);
    return std::clamp(js, 0.0, 1.0);
}

std::vector<std::vector<double>> pairwise_js(const std::vector<RoutingDistribution>& dists, Execution exec) {
    const auto n = dists.size();
    for (const auto& d : dists) {
        if (d.probs.size() != dists.front().probs.size()) throw NumericError("distributions differ in expert count");
        check_distribution(d.probs);
    }
    auto rows = map_indices(n, exec, [&](std::size_t i) {
        std::vector<double> row(n, 0.0);
        for (std::size_t j = i + 1; j < n; ++j) row[j] = js_divergence(dists[i].probs, dists[j].probs);
        return row;
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) rows[i][j] = rows[j][i];
    return rows;
}

double aggregate_capability_score(const std::vector<std::optional<double>>& scores) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : scores) {
        if (!s) continue;
        sum += *s;
        ++n;
    }
    if (n == 0) throw ConfigError("no benchmark scores available");
    return sum / static_cast<double>(n);
}

std::vector<RoutingDistribution> read_routing_counts(std::istream& in) {
    std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::uint64_t>> groups;
    std::size_t experts = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::is_blank(line)) continue;
        if (line_no == 1 && line.starts_with("config_id")) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, '\t')) fields.push_back(f);
        auto fail = [&](const std::string& msg) {
            throw ParseError("line " + std::to_string(line_no) + ": " + msg);
        };
        if (fields.size() != 4) fail("expected 4 tab-separated fields");
        std::size_t expert = 0;
        std::uint64_t count = 0;
        try {
            std::size_t used = 0;
            expert = std::stoull(fields[2], &used);
            if (used != fields[2].size() || fields[2].starts_with('-')) fail("bad expert id");
            count = std::stoull(fields[3], &used);
            if (used != fields[3].size() || fields[3].starts_with('-')) fail("bad count");
        } catch (const std::logic_error&) {
            fail("expert id and count must be non-negative integers");
        }
        groups[{fields[0], fields[1]}][expert] += count;
        experts = std::max(experts, expert + 1);
    }
    std::vector<RoutingDistribution> out;
    for (const auto& [key, by_expert] : groups) {
        std::vector<std::uint64_t> counts(experts, 0);
        for (const auto& [e, c] : by_expert) counts[e] = c;
        try {
            out.push_back(aggregate_distribution(counts, key.first, key.second));
        } catch (const NumericError&) {
            throw ParseError("routing counts for " + key.first + "/" + key.second + " sum to zero");
        }
    }
    return out;
}

}  // namespace curate::routing
