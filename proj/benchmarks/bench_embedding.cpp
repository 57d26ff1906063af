#include "scimet/embedding.hpp"
#include "scimet/synth.hpp"

#include <benchmark/benchmark.h>

using namespace scimet;

namespace {

SynthResult make_corpus(uint32_t n_papers) {
    GeneratorConfig cfg;
    cfg.seed = 1;
    cfg.n_papers = n_papers;
    cfg.n_authors = std::max<uint32_t>(20, n_papers / 10);
    cfg.n_keywords = 200;
    cfg.n_clusters = 20;
    return generate(cfg);
}

} // namespace

static void BM_PairStreamBuild(benchmark::State& state) {
    auto synth = make_corpus(uint32_t(state.range(0)));
    for (auto _ : state) {
        PairStream s = build_pair_stream(synth.corpus, 0);
        benchmark::DoNotOptimize(s.pairs_per_epoch());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PairStreamBuild)->Range(1000, 32000)->Complexity()->Unit(benchmark::kMillisecond);

static void BM_TrainEpoch(benchmark::State& state) {
    auto synth = make_corpus(4000);
    TrainConfig cfg;
    cfg.dimension = int(state.range(0));
    cfg.epochs = 1;
    PairStream stream = build_pair_stream(synth.corpus, 0);
    for (auto _ : state) {
        PairStream fresh = stream;
        EmbeddingTable t = train_skipgram(fresh, cfg);
        benchmark::DoNotOptimize(t.in_vecs.data());
    }
    state.counters["pairs/s"] = benchmark::Counter(
        double(stream.pairs_per_epoch()) * double(state.iterations()),
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_TrainEpoch)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_ExactPmi(benchmark::State& state) {
    auto synth = make_corpus(uint32_t(state.range(0)));
    for (auto _ : state) {
        PmiTable t = exact_pmi(synth.corpus, 5);
        benchmark::DoNotOptimize(t.pair_count());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactPmi)->Range(1000, 32000)->Complexity()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
