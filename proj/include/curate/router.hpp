#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "curate/parallel.hpp"

namespace curate::router {

enum class ScoreFn { Softmax, Sigmoid };

std::string_view to_string(ScoreFn f);
ScoreFn parse_score_fn(std::string_view s);

struct GateConfig {
    std::size_t experts = 64;
    std::size_t top_k = 2;
    std::uint64_t warmup_steps = 0;
    ScoreFn score_fn = ScoreFn::Softmax;
    double stats_momentum = 0.99;
    /// Divide the kept gates by their sum. Off: gates are the masked scores.
    bool renormalize = false;

    /// Throws ConfigError unless 1 <= top_k <= experts and 0 <= momentum < 1.
    void validate() const;
};

/// Router projection: s = W^T h + b with W stored dim x experts, row-major.
struct RouterParams {
    std::size_t dim = 0;
    std::size_t experts = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    /// Entries drawn from N(0, scale^2 / dim), zero bias.
    static RouterParams random(std::size_t dim, std::size_t experts, std::uint64_t seed, double scale = 1.0);
    /// Throws NumericError on inconsistent sizes or non-finite entries.
    void validate() const;
};

/// Pooled scalar mean and standard deviation of router logits.
struct RunningStats {
    double mean = 0.0;
    double stddev = 1.0;
    bool initialized = false;
};

inline constexpr double kStdFloor = 1e-6;

/// min(t_c / t_w, 1); 1 when t_w = 0.
double warmup_coefficient(std::uint64_t t_c, std::uint64_t t_w);

std::vector<double> logits(const std::vector<double>& h, const RouterParams& params);

/// alpha * s + (1 - alpha) * (mean + stddev * eps) with eps standard normal
/// from gen, one draw per component. alpha == 1 returns s unchanged and draws nothing.
std::vector<double> perturb_logits(const std::vector<double>& s, double alpha, const RunningStats& stats,
                                   std::mt19937_64& gen);
std::vector<double> perturb_logits(const std::vector<double>& s, double alpha, const RunningStats& stats,
                                   std::uint64_t noise_seed);

/// Softmax over experts or element-wise sigmoid.
std::vector<double> score(const std::vector<double>& s, ScoreFn fn);

struct GateResult {
    /// Scores masked to the chosen experts.
    std::vector<double> gates;
    /// k expert ids, highest score first, ties to the lower index.
    std::vector<std::size_t> chosen;
    std::vector<double> scores;
};

GateResult gate_from_logits(const std::vector<double>& perturbed, const GateConfig& config);

/// Full gate for one token at step t_c. Throws NumericError on non-finite input.
GateResult gate(const std::vector<double>& h, const RouterParams& params, const GateConfig& config,
                std::uint64_t t_c, const RunningStats& stats, std::uint64_t noise_seed);

/// p' = sum over chosen i of gates[i] * expert_outputs[i], plus shared_output.
std::vector<double> combine_experts(const std::vector<double>& gates, const std::vector<std::vector<double>>& expert_outputs,
                                    const std::vector<double>& shared_output);

/// Seeded random linear experts, enough to exercise the combination step.
struct ExpertBank {
    std::size_t dim = 0;
    /// One dim x dim matrix per expert, then the shared expert.
    std::vector<std::vector<double>> maps;
    std::vector<double> shared;

    static ExpertBank random(std::size_t dim, std::size_t experts, std::uint64_t seed);
    std::vector<std::vector<double>> outputs(const std::vector<double>& o) const;
    std::vector<double> shared_output(const std::vector<double>& o) const;
};

/// EMA with momentum; the first update sets mean and stddev from the batch. Stddev floored at kStdFloor.
RunningStats update_running_stats(const RunningStats& stats, const std::vector<double>& batch, double momentum);

/// N * sum_i f_i * P_i, f_i = share of tokens whose top-1 expert is i, P_i = mean probability of i.
/// Rows are normalized before averaging.
double load_balance_loss(const std::vector<std::vector<double>>& probs);

/// Mean over tokens of logsumexp(s)^2.
double router_z_loss(const std::vector<std::vector<double>>& logits);

struct StepSummary {
    std::uint64_t step = 0;
    double alpha = 0.0;
    double max_load_fraction = 0.0;
    double balance_loss = 0.0;
    double z_loss = 0.0;
};

struct RoutingTrace {
    std::size_t experts = 0;
    std::size_t top_k = 0;
    std::size_t tokens_per_step = 0;
    std::vector<StepSummary> steps;
    /// steps x tokens x k expert ids and matching gate values.
    std::vector<std::uint32_t> chosen;
    std::vector<double> gates;
    /// Tokens routed to each expert over the whole run.
    std::vector<std::uint64_t> counts;
};

struct SimulationOptions {
    std::uint64_t steps = 1000;
    std::size_t tokens_per_step = 64;
    std::uint64_t input_seed = 0;
    std::uint64_t noise_seed = 0;
    Execution execution = Execution::Serial;
};

/// Each step: standard normal token inputs, learned logits, stats update on
/// the step's pooled logits, then per-token perturbation and gating.
/// Noise for token j of step t comes from substream (noise_seed, t * tokens + j),
/// so serial and parallel execution give identical traces.
RoutingTrace simulate_routing(const GateConfig& config, const RouterParams& params, const SimulationOptions& options);

inline constexpr std::string_view kSummaryHeader = "step\talpha\tmax_load_fraction\tbalance_loss\tz_loss";

}  // namespace curate::router
