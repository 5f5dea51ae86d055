#include "curate/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "curate/error.hpp"
#include "curate/rng.hpp"

namespace curate::router {

std::string_view to_string(ScoreFn f) { return f == ScoreFn::Softmax ? "softmax" : "sigmoid"; }

ScoreFn parse_score_fn(std::string_view s) {
    if (s == "softmax") return ScoreFn::Softmax;
    if (s == "sigmoid") return ScoreFn::Sigmoid;
    throw ConfigError("unknown score function: " + std::string(s));
}

void GateConfig::validate() const {
    if (experts == 0) throw ConfigError("expert count must be positive");
    if (top_k < 1 || top_k > experts) throw ConfigError("top_k must be in [1, experts]");
    if (!(stats_momentum >= 0.0 && stats_momentum < 1.0)) throw ConfigError("stats momentum must be in [0, 1)");
}

RouterParams RouterParams::random(std::size_t dim, std::size_t experts, std::uint64_t seed, double scale) {
    RouterParams p;
    p.dim = dim;
    p.experts = experts;
    p.weight.resize(dim * experts);
    p.bias.assign(experts, 0.0);
    auto gen = rng::engine(seed, "router.params");
    std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1))));
    for (auto& w : p.weight) w = normal(gen);
    return p;
}

void RouterParams::validate() const {
    if (weight.size() != dim * experts || bias.size() != experts)
        throw NumericError("router parameter sizes do not match dim x experts");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(weight.begin(), weight.end(), finite) || !std::all_of(bias.begin(), bias.end(), finite))
        throw NumericError("router parameters contain non-finite values");
}

double warmup_coefficient(std::uint64_t t_c, std::uint64_t t_w) {
    if (t_w == 0 || t_c >= t_w) return 1.0;
    return static_cast<double>(t_c) / static_cast<double>(t_w);
}

std::vector<double> logits(const std::vector<double>& h, const RouterParams& params) {
    if (h.size() != params.dim) throw NumericError("token dimension does not match router");
    std::vector<double> s(params.bias);
    for (std::size_t d = 0; d < params.dim; ++d) {
        const double hd = h[d];
        const double* row = &params.weight[d * params.experts];
        for (std::size_t i = 0; i < params.experts; ++i) s[i] += row[i] * hd;
    }
    return s;
}

std::vector<double> perturb_logits(const std::vector<double>& s, double alpha, const RunningStats& stats,
                                   std::mt19937_64& gen) {
    if (alpha == 1.0) return s;
    std::normal_distribution<double> normal;
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double eps = normal(gen);
        out[i] = alpha * s[i] + (1.0 - alpha) * (stats.mean + stats.stddev * eps);
    }
    return out;
}

std::vector<double> perturb_logits(const std::vector<double>& s, double alpha, const RunningStats& stats,
                                   std::uint64_t noise_seed) {
    auto gen = rng::engine(noise_seed, "router.noise");
    return perturb_logits(s, alpha, stats, gen);
}

std::vector<double> score(const std::vector<double>& s, ScoreFn fn) {
    std::vector<double> out(s.size());
    if (fn == ScoreFn::Sigmoid) {
        for (std::size_t i = 0; i < s.size(); ++i)
            out[i] = s[i] >= 0 ? 1.0 / (1.0 + std::exp(-s[i])) : std::exp(s[i]) / (1.0 + std::exp(s[i]));
        return out;
    }
    const double m = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += out[i] = std::exp(s[i] - m);
    for (auto& v : out) v /= sum;
    return out;
}

GateResult gate_from_logits(const std::vector<double>& perturbed, const GateConfig& config) {
    if (perturbed.size() != config.experts) throw NumericError("logit count does not match expert count");
    for (double v : perturbed)
        if (!std::isfinite(v)) throw NumericError("non-finite router logit");
    GateResult r;
    r.scores = score(perturbed, config.score_fn);
    std::vector<std::size_t> idx(config.experts);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto k = config.top_k;
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](auto a, auto b) {
        return r.scores[a] != r.scores[b] ? r.scores[a] > r.scores[b] : a < b;
    });
    r.chosen.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    r.gates.assign(config.experts, 0.0);
    double kept = 0.0;
    for (auto i : r.chosen) kept += r.gates[i] = r.scores[i];
    if (config.renormalize && kept > 0.0)
        for (auto i : r.chosen) r.gates[i] /= kept;
    return r;
}

GateResult gate(const std::vector<double>& h, const RouterParams& params, const GateConfig& config, std::uint64_t t_c,
                const RunningStats& stats, std::uint64_t noise_seed) {
    for (double v : h)
        if (!std::isfinite(v)) throw NumericError("non-finite token representation");
    params.validate();
    const auto s = logits(h, params);
    const auto alpha = warmup_coefficient(t_c, config.warmup_steps);
    return gate_from_logits(perturb_logits(s, alpha, stats, noise_seed), config);
}

std::vector<double> combine_experts(const std::vector<double>& gates, const std::vector<std::vector<double>>& expert_outputs,
                                    const std::vector<double>& shared_output) {
    if (gates.size() != expert_outputs.size()) throw NumericError("gate count does not match expert count");
    std::vector<double> p(shared_output.size(), 0.0);
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (gates[i] == 0.0) continue;
        if (expert_outputs[i].size() != p.size()) throw NumericError("expert output dimension mismatch");
        for (std::size_t d = 0; d < p.size(); ++d) p[d] += gates[i] * expert_outputs[i][d];
    }
    for (std::size_t d = 0; d < p.size(); ++d) p[d] += shared_output[d];
    return p;
}

ExpertBank ExpertBank::random(std::size_t dim, std::size_t experts, std::uint64_t seed) {
    ExpertBank bank;
    bank.dim = dim;
    auto gen = rng::engine(seed, "router.experts");
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1))));
    bank.maps.resize(experts);
    for (auto& m : bank.maps) {
        m.resize(dim * dim);
        for (auto& v : m) v = normal(gen);
    }
    bank.shared.resize(dim * dim);
    for (auto& v : bank.shared) v = normal(gen);
    return bank;
}

namespace {

std::vector<double> apply(const std::vector<double>& m, std::size_t dim, const std::vector<double>& o) {
    if (o.size() != dim) throw NumericError("expert input dimension mismatch");
    std::vector<double> out(dim, 0.0);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) out[r] += m[r * dim + c] * o[c];
    return out;
}

}  // namespace

std::vector<std::vector<double>> ExpertBank::outputs(const std::vector<double>& o) const {
    std::vector<std::vector<double>> out;
    out.reserve(maps.size());
    for (const auto& m : maps) out.push_back(apply(m, dim, o));
    return out;
}

std::vector<double> ExpertBank::shared_output(const std::vector<double>& o) const { return apply(shared, dim, o); }

RunningStats update_running_stats(const RunningStats& stats, const std::vector<double>& batch, double momentum) {
    if (batch.empty()) throw NumericError("running stats need a non-empty batch");
    double mean = 0.0;
    for (double v : batch) mean += v;
    mean /= static_cast<double>(batch.size());
    double var = 0.0;
    for (double v : batch) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(batch.size()));
    RunningStats out;
    out.initialized = true;
    if (!stats.initialized) {
        out.mean = mean;
        out.stddev = sd;
    } else {
        out.mean = momentum * stats.mean + (1.0 - momentum) * mean;
        out.stddev = momentum * stats.stddev + (1.0 - momentum) * sd;
    }
    out.stddev = std::max(out.stddev, kStdFloor);
    return out;
}

double load_balance_loss(const std::vector<std::vector<double>>& probs) {
    if (probs.empty()) throw NumericError("load balance loss needs at least one token");
    const auto n = probs.front().size();
    std::vector<double> f(n, 0.0);
    std::vector<double> p(n, 0.0);
    for (const auto& row : probs) {
        if (row.size() != n) throw NumericError("probability rows differ in length");
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        f[top] += 1.0;
        for (std::size_t i = 0; i < n; ++i) p[i] += sum > 0 ? row[i] / sum : 0.0;
    }
    const auto t = static_cast<double>(probs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += (f[i] / t) * (p[i] / t);
    return static_cast<double>(n) * loss;
}

double router_z_loss(const std::vector<std::vector<double>>& batch) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : batch) {
        if (s.empty()) continue;
        const double m = *std::max_element(s.begin(), s.end());
        double sum = 0.0;
        for (double v : s) sum += std::exp(v - m);
        const double lse = m + std::log(sum);
        total += lse * lse;
    }
    return total / static_cast<double>(batch.size());
}

RoutingTrace simulate_routing(const GateConfig& config, const RouterParams& params, const SimulationOptions& options) {
    config.validate();
    params.validate();
    if (params.experts != config.experts) throw ConfigError("router parameters and config disagree on expert count");
    if (options.steps == 0) throw ConfigError("steps must be at least 1");
    if (options.tokens_per_step == 0) throw ConfigError("tokens per step must be at least 1");

    const auto n = config.experts;
    const auto k = config.top_k;
    const auto tokens = options.tokens_per_step;
    RoutingTrace trace;
    trace.experts = n;
    trace.top_k = k;
    trace.tokens_per_step = tokens;
    trace.counts.assign(n, 0);
    trace.chosen.reserve(options.steps * tokens * k);
    trace.gates.reserve(options.steps * tokens * k);

    RunningStats stats;
    for (std::uint64_t t = 0; t < options.steps; ++t) {
        auto input_gen = rng::engine(options.input_seed, "router.input", t);
        std::normal_distribution<double> normal;
        std::vector<std::vector<double>> h(tokens, std::vector<double>(params.dim));
        for (auto& row : h)
            for (auto& v : row) v = normal(input_gen);

        const auto s = map_indices(tokens, options.execution, [&](std::size_t j) { return logits(h[j], params); });
        std::vector<double> pooled;
        pooled.reserve(tokens * n);
        for (const auto& row : s) pooled.insert(pooled.end(), row.begin(), row.end());
        stats = update_running_stats(stats, pooled, config.stats_momentum);

        const double alpha = warmup_coefficient(t, config.warmup_steps);
        const auto results = map_indices(tokens, options.execution, [&](std::size_t j) {
            auto gen = rng::engine(options.noise_seed, "router.noise", t * tokens + j);
            return gate_from_logits(perturb_logits(s[j], alpha, stats, gen), config);
        });

        std::vector<std::uint64_t> step_counts(n, 0);
        std::vector<std::vector<double>> probs;
        probs.reserve(tokens);
        for (const auto& r : results) {
            for (auto i : r.chosen) {
                ++step_counts[i];
                trace.chosen.push_back(static_cast<std::uint32_t>(i));
                trace.gates.push_back(r.gates[i]);
            }
            probs.push_back(r.scores);
        }
        for (std::size_t i = 0; i < n; ++i) trace.counts[i] += step_counts[i];
        StepSummary summary;
        summary.step = t;
        summary.alpha = alpha;
        summary.max_load_fraction = static_cast<double>(*std::max_element(step_counts.begin(), step_counts.end())) /
                                    static_cast<double>(tokens * k);
        summary.balance_loss = load_balance_loss(probs);
        summary.z_loss = router_z_loss(s);
        trace.steps.push_back(summary);
    }
    return trace;
}

}  // namespace curate::router
