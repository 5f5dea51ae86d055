#include <benchmark/benchmark.h>

#include "curate/batch.hpp"
#include "curate/router.hpp"
#include "curate/routing_analysis.hpp"
#include "curate/scaffold_select.hpp"
#include "support/synth.hpp"

using namespace curate;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::Serial : Execution::Parallel; }

const std::vector<Document>& corpus() {
    static const auto docs = synth::pipeline_corpus(1, 2000);
    return docs;
}

void BM_FilterCode(benchmark::State& state) {
    const auto registry = code::RuleRegistry::defaults();
    for (auto _ : state) {
        code::DedupIndex index(3);
        benchmark::DoNotOptimize(filter_code_batch(corpus(), registry, index, {}, mode(state)));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_ValidateMath(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(validate_math_batch(corpus(), {}, mode(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_ClassifyDomain(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(classify_domain_batch(corpus(), {}, mode(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_ScoreDocuments(benchmark::State& state) {
    static const auto model = [] {
        scaffold::ModelConfig c;
        c.bucket_count = 1u << 18;
        return scaffold::train_classifier(synth::scaffold_corpus(1, 500, 500), c).model;
    }();
    static const auto docs = synth::math_corpus(2, 1000);
    for (auto _ : state) benchmark::DoNotOptimize(scaffold::score_documents(model, docs, mode(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs.size()));
}

void BM_SimulateRouting(benchmark::State& state) {
    router::GateConfig config;
    config.warmup_steps = 50;
    const auto params = router::RouterParams::random(32, config.experts, 1);
    router::SimulationOptions options;
    options.steps = 100;
    options.tokens_per_step = 256;
    options.execution = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(router::simulate_routing(config, params, options));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(options.steps * options.tokens_per_step));
}

void BM_PairwiseJs(benchmark::State& state) {
    static const auto dists = [] {
        std::vector<routing::RoutingDistribution> out;
        synth::Gen g(4);
        for (int i = 0; i < 300; ++i) {
            std::vector<std::uint64_t> counts(64);
            for (auto& c : counts) c = 1 + g() % 1000;
            out.push_back(routing::aggregate_distribution(counts));
        }
        return out;
    }();
    for (auto _ : state) benchmark::DoNotOptimize(routing::pairwise_js(dists, mode(state)));
}

}  // namespace

BENCHMARK(BM_FilterCode)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateMath)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyDomain)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreDocuments)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateRouting)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseJs)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
