#include "curate/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/rng.hpp"

namespace curate::mix {

std::string_view to_string(Tier t) {
    switch (t) {
        case Tier::High: return "high";
        case Tier::Medium: return "medium";
        case Tier::Low: return "low";
        case Tier::Excluded: return "excluded";
    }
    return "excluded";
}

Tier parse_tier(std::string_view s) {
    if (s == "high") return Tier::High;
    if (s == "medium") return Tier::Medium;
    if (s == "low") return Tier::Low;
    if (s == "excluded") return Tier::Excluded;
    throw ConfigError("unknown tier: " + std::string(s));
}

void TierCutoffs::validate() const {
    if (!(0.0 <= admit && admit <= mid && mid <= high && high <= 1.0))
        throw ConfigError("tier cutoffs must satisfy 0 <= admit <= mid <= high <= 1");
}

Tier assign_tier(const Document& doc, const TierCutoffs& c) {
    if (!doc.quality_score) return Tier::Excluded;
    const double s = *doc.quality_score;
    if (s < c.admit) return Tier::Excluded;
    if (s < c.mid) return Tier::Low;
    if (s < c.high) return Tier::Medium;
    return Tier::High;
}

std::vector<TierAssignment> stratify(const std::vector<Document>& docs, const TierCutoffs& cutoffs) {
    cutoffs.validate();
    std::vector<TierAssignment> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back({d.id, assign_tier(d, cutoffs)});
    return out;
}

std::uint64_t MixturePlan::allocated_total() const {
    std::uint64_t sum = 0;
    for (const auto& [_, e] : entries) sum += e.allocated;
    return sum;
}

namespace {

std::uint64_t subset_share(double fraction, std::uint64_t allocated) {
    return static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(allocated)));
}

void apply_replacement(MixturePlan& plan, const std::string& domain, Replacement r) {
    auto& entry = plan.entries.at(domain);
    r.subset_tokens = subset_share(r.fraction, entry.allocated);
    if (r.subset_tokens > r.subset_available) {
        std::ostringstream msg;
        msg << "subset " << r.subset << " has " << r.subset_available << " tokens but " << domain << " needs "
            << r.subset_tokens;
        throw InfeasibleError(msg.str());
    }
    entry.replacement = std::move(r);
}

}  // namespace

MixturePlan plan_mixture(const std::map<std::string, std::uint64_t>& available,
                         const std::map<std::string, double>& weights, std::uint64_t budget) {
    if (budget == 0) throw ConfigError("budget must be positive");
    double weight_sum = 0.0;
    for (const auto& [name, w] : weights) {
        if (!std::isfinite(w) || w < 0.0) throw ConfigError("weight for " + name + " must be finite and >= 0");
        weight_sum += w;
    }
    if (!(weight_sum > 0.0)) throw ConfigError("at least one weight must be positive");

    MixturePlan plan;
    plan.total_budget = budget;
    for (const auto& [name, tokens] : available) plan.entries[name].available = tokens;
    std::uint64_t positive_available = 0;
    for (const auto& [name, w] : weights) {
        auto& e = plan.entries[name];
        e.weight = w / weight_sum;
        if (w > 0.0) {
            if (e.available == 0) throw InfeasibleError("domain " + name + " has positive weight but no tokens");
            positive_available += e.available;
        }
    }
    if (positive_available < budget) {
        std::ostringstream msg;
        msg << "available tokens " << positive_available << " fall short of budget " << budget << " by "
            << budget - positive_available;
        throw InfeasibleError(msg.str());
    }

    // real-valued cap-and-redistribute fixpoint
    std::map<std::string, double> share;
    std::vector<std::string> open;
    for (const auto& [name, e] : plan.entries)
        if (e.weight > 0.0) open.push_back(name);
    double remaining = static_cast<double>(budget);
    while (!open.empty()) {
        double open_weight = 0.0;
        for (const auto& name : open) open_weight += plan.entries[name].weight;
        std::vector<std::string> capped;
        std::vector<std::string> still_open;
        for (const auto& name : open) {
            const auto& e = plan.entries[name];
            const double want = remaining * e.weight / open_weight;
            if (want > static_cast<double>(e.available)) capped.push_back(name);
            else still_open.push_back(name);
        }
        if (capped.empty()) {
            for (const auto& name : open) share[name] = remaining * plan.entries[name].weight / open_weight;
            break;
        }
        for (const auto& name : capped) {
            const auto avail = static_cast<double>(plan.entries[name].available);
            share[name] = avail;
            remaining -= avail;
        }
        open = std::move(still_open);
    }

    // largest remainder rounding
    std::uint64_t floors = 0;
    std::vector<std::pair<double, std::string>> fractions;
    for (auto& [name, e] : plan.entries) {
        const auto it = share.find(name);
        if (it == share.end()) continue;
        const double x = std::min(it->second, static_cast<double>(e.available));
        e.allocated = std::min(static_cast<std::uint64_t>(std::floor(x)), e.available);
        floors += e.allocated;
        fractions.emplace_back(x - std::floor(x), name);
    }
    std::sort(fractions.begin(), fractions.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::uint64_t left = budget - std::min(floors, budget);
    while (left > 0) {
        bool progressed = false;
        for (const auto& [frac, name] : fractions) {
            if (left == 0) break;
            auto& e = plan.entries[name];
            if (e.allocated < e.available) {
                ++e.allocated;
                --left;
                progressed = true;
            }
        }
        if (!progressed) throw InfeasibleError("cannot place the rounding remainder");
    }
    return plan;
}

namespace {

MixturePlan replan(const MixturePlan& plan, const std::map<std::string, double>& weights,
                   const std::map<std::string, std::uint64_t>& available) {
    auto next = plan_mixture(available, weights, plan.total_budget);
    next.cutoffs = plan.cutoffs;
    for (const auto& [name, e] : plan.entries)
        if (e.replacement && next.entries.contains(name)) apply_replacement(next, name, *e.replacement);
    return next;
}

}  // namespace

MixturePlan ablate_domain(const MixturePlan& plan, const std::string& domain) {
    const auto it = plan.entries.find(domain);
    if (it == plan.entries.end()) throw ConfigError("domain " + domain + " is not in the plan");
    std::map<std::string, double> weights;
    std::map<std::string, std::uint64_t> available;
    double rest = 0.0;
    for (const auto& [name, e] : plan.entries) {
        if (name == domain) continue;
        weights[name] = e.weight;
        available[name] = e.available;
        rest += e.weight;
    }
    if (!(rest > 0.0)) throw ConfigError("cannot ablate " + domain + ": no other domain has positive weight");
    if (it->second.weight == 0.0) {
        auto next = plan;
        next.entries.erase(domain);
        next.cutoffs.erase(domain);
        return next;
    }
    auto next = replan(plan, weights, available);
    next.cutoffs.erase(domain);
    return next;
}

MixturePlan replace_within_domain(const MixturePlan& plan, const std::string& domain, const std::string& subset,
                                  std::uint64_t subset_available, double fraction) {
    if (!plan.entries.contains(domain)) throw ConfigError("domain " + domain + " is not in the plan");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must be in [0, 1]");
    if (subset.empty()) throw ConfigError("subset name must not be empty");
    auto next = plan;
    apply_replacement(next, domain, {subset, fraction, subset_available, 0});
    return next;
}

double TierWeights::of(Tier t) const {
    switch (t) {
        case Tier::High: return high;
        case Tier::Medium: return medium;
        case Tier::Low: return low;
        case Tier::Excluded: return 0.0;
    }
    return 0.0;
}

namespace {

void draw(const std::string& domain, const std::string& pool_name, std::uint64_t target, const TierWeights& tw,
          const CorpusIndex& index, std::uint64_t seed, const SampleOptions& options, std::vector<ManifestEntry>& out) {
    if (target == 0) return;
    const auto it = index.pools.find(pool_name);
    if (it == index.pools.end()) throw InfeasibleError("no documents indexed for " + pool_name);
    const auto& docs = it->second;
    std::uint64_t remaining = target;
    for (std::uint32_t epoch = 0; epoch < options.max_epochs && remaining > 0; ++epoch) {
        auto gen = rng::engine(seed, "mix.sample." + pool_name, epoch);
        std::vector<std::pair<double, std::size_t>> keys;
        keys.reserve(docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            // one draw per document keeps keys stable when weights change
            const double u = rng::open_unit(gen);
            const double w = tw.of(docs[i].tier);
            if (w > 0.0 && docs[i].tokens > 0) keys.emplace_back(-std::log(u) / w, i);
        }
        std::sort(keys.begin(), keys.end());
        for (const auto& [key, i] : keys) {
            if (remaining == 0) break;
            const auto take = std::min(docs[i].tokens, remaining);
            out.push_back({docs[i].id, domain, pool_name, docs[i].tier, take});
            remaining -= take;
        }
        if (keys.empty()) break;
    }
    if (remaining > 0) {
        std::ostringstream msg;
        msg << "pool " << pool_name << " exhausted with " << remaining << " of " << target << " tokens unfilled";
        throw InfeasibleError(msg.str());
    }
}

}  // namespace

std::vector<ManifestEntry> sample_stream(const MixturePlan& plan, const TierWeights& tier_weights,
                                         const CorpusIndex& index, std::uint64_t seed, const SampleOptions& options) {
    for (double w : {tier_weights.high, tier_weights.medium, tier_weights.low})
        if (!std::isfinite(w) || w < 0.0) throw ConfigError("tier weights must be finite and >= 0");
    if (options.max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
    std::vector<ManifestEntry> out;
    for (const auto& [domain, e] : plan.entries) {
        const std::uint64_t subset = e.replacement ? e.replacement->subset_tokens : 0;
        draw(domain, domain, e.allocated - subset, tier_weights, index, seed, options, out);
        if (e.replacement) draw(domain, e.replacement->subset, subset, tier_weights, index, seed, options, out);
    }
    return out;
}

std::string plan_to_json(const MixturePlan& plan) {
    nlohmann::ordered_json j;
    j["total_budget"] = plan.total_budget;
    auto& domains = j["domains"];
    domains = nlohmann::ordered_json::object();
    for (const auto& [name, e] : plan.entries) {
        nlohmann::ordered_json d;
        d["available"] = e.available;
        d["weight"] = e.weight;
        d["allocated"] = e.allocated;
        if (e.replacement) {
            d["replacement"] = {{"subset", e.replacement->subset},
                                {"fraction", e.replacement->fraction},
                                {"subset_available", e.replacement->subset_available},
                                {"subset_tokens", e.replacement->subset_tokens}};
        }
        if (const auto c = plan.cutoffs.find(name); c != plan.cutoffs.end())
            d["cutoffs"] = {{"admit", c->second.admit}, {"mid", c->second.mid}, {"high", c->second.high}};
        domains[name] = std::move(d);
    }
    return j.dump(2) + "\n";
}

MixturePlan plan_from_json(std::string_view json_text) {
    try {
        const auto j = nlohmann::json::parse(json_text);
        MixturePlan plan;
        plan.total_budget = j.at("total_budget").get<std::uint64_t>();
        for (const auto& [name, d] : j.at("domains").items()) {
            MixtureEntry e;
            e.available = d.at("available").get<std::uint64_t>();
            e.weight = d.at("weight").get<double>();
            e.allocated = d.at("allocated").get<std::uint64_t>();
            if (d.contains("replacement")) {
                const auto& r = d.at("replacement");
                e.replacement = Replacement{r.at("subset").get<std::string>(), r.at("fraction").get<double>(),
                                            r.at("subset_available").get<std::uint64_t>(),
                                            r.at("subset_tokens").get<std::uint64_t>()};
            }
            if (d.contains("cutoffs")) {
                const auto& c = d.at("cutoffs");
                TierCutoffs cut{c.at("admit").get<double>(), c.at("mid").get<double>(), c.at("high").get<double>()};
                cut.validate();
                plan.cutoffs[name] = cut;
            }
            plan.entries[name] = std::move(e);
        }
        if (plan.allocated_total() != plan.total_budget) throw ConfigError("plan allocations do not sum to the budget");
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed plan: ") + e.what());
    }
}

std::string manifest_line(const ManifestEntry& e) {
    std::ostringstream out;
    out << e.doc_id << '\t' << e.domain << '\t' << e.source << '\t' << to_string(e.tier) << '\t' << e.tokens;
    return out.str();
}

}  // namespace curate::mix
