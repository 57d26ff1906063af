#include "scimet/econometrics.hpp"
#include "scimet/rng.hpp"

#include <benchmark/benchmark.h>

using namespace scimet;

namespace {

struct PanelFixture {
    Eigen::MatrixXd data;
    std::vector<int32_t> f1, f2;
};

PanelFixture make_panel(int n, int g1, int g2, int cols) {
    Rng rng(3);
    PanelFixture fx;
    fx.data.resize(n, cols);
    fx.f1.resize(size_t(n));
    fx.f2.resize(size_t(n));
    for (int r = 0; r < n; ++r) {
        fx.f1[size_t(r)] = int32_t(rng.below(uint64_t(g1)));
        fx.f2[size_t(r)] = int32_t(rng.below(uint64_t(g2)));
        for (int c = 0; c < cols; ++c) fx.data(r, c) = rng.normal();
    }
    return fx;
}

} // namespace

static void BM_AlternatingDemean(benchmark::State& state) {
    int n = int(state.range(0));
    auto fx = make_panel(n, std::max(2, n / 15), 10, 9);
    for (auto _ : state) {
        Eigen::MatrixXd work = fx.data;
        WithinReport rep = alternating_demean(work, fx.f1, fx.f2, 1e-8, 1000);
        benchmark::DoNotOptimize(rep.iterations);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AlternatingDemean)->Range(1000, 64000)->Complexity()->Unit(benchmark::kMillisecond);

static void BM_OlsRobust(benchmark::State& state) {
    int n = int(state.range(0));
    auto fx = make_panel(n, 2, 2, 9);
    Eigen::MatrixXd x = fx.data.rightCols(8);
    Eigen::VectorXd y = fx.data.col(0);
    std::vector<std::string> names(8, "x");
    for (auto _ : state) {
        OlsFit fit = ols_robust(x, y, names);
        benchmark::DoNotOptimize(fit.beta.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OlsRobust)->Range(1000, 64000)->Complexity()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
