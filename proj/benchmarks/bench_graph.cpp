#include "scimet/corpus.hpp"
#include "scimet/metrics.hpp"
#include "scimet/synth.hpp"

#include <benchmark/benchmark.h>

using namespace scimet;

namespace {

SynthResult make_corpus(uint32_t n_papers) {
    GeneratorConfig cfg;
    cfg.seed = 2;
    cfg.n_papers = n_papers;
    cfg.n_authors = std::max<uint32_t>(50, n_papers / 5);
    cfg.n_keywords = 100;
    cfg.refs_max = 10;
    return generate(cfg);
}

} // namespace

static void BM_BuildCitationIndex(benchmark::State& state) {
    auto synth = make_corpus(uint32_t(state.range(0)));
    for (auto _ : state) {
        CitationIndex idx = build_citation_index(synth.corpus);
        benchmark::DoNotOptimize(idx.edge_count());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildCitationIndex)->Range(1000, 64000)->Complexity()->Unit(benchmark::kMillisecond);

static void BM_DevelopmentalIndexAll(benchmark::State& state) {
    auto synth = make_corpus(uint32_t(state.range(0)));
    CitationIndex idx = build_citation_index(synth.corpus);
    for (auto _ : state) {
        double sum = 0;
        for (uint32_t p = 0; p < synth.corpus.size(); ++p)
            if (auto d = developmental_index(synth.corpus, idx, p)) sum += *d;
        benchmark::DoNotOptimize(sum);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DevelopmentalIndexAll)
    ->Range(1000, 32000)
    ->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_HierarchyTrend(benchmark::State& state) {
    auto synth = make_corpus(uint32_t(state.range(0)));
    for (auto _ : state) {
        auto points = hierarchy_trend(synth.corpus, {}, 5);
        benchmark::DoNotOptimize(points.size());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HierarchyTrend)->Range(1000, 32000)->Complexity()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
