// Serial reference kernels against their OpenMP counterparts.
#include <random>

#include <benchmark/benchmark.h>

#include "spbvp/harness.hpp"

using namespace spbvp;

namespace {

BlockTridiag random_system(std::size_t n, std::size_t m) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BlockTridiag t(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) {
                t.main[i](r, c) = u(rng);
                if (i + 1 < n) {
                    t.lower[i](r, c) = u(rng);
                    t.upper[i](r, c) = u(rng);
                }
            }
    return t;
}

void BM_BlockApplySerial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const BlockTridiag t = random_system(n, 2);
    const std::vector<double> x(2 * n, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(block_apply_serial(t, x));
}

void BM_BlockApply(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const BlockTridiag t = random_system(n, 2);
    const std::vector<double> x(2 * n, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(block_apply(t, x));
}

void BM_DiagnosticsSerial(benchmark::State& state) {
    const LayerSpec s{1e-6};
    const Mesh1D m = shishkin(s, static_cast<std::size_t>(state.range(0)));
    const auto g = [](double x) { return 1.0 + 1e6 * std::exp(-1e6 * x); };
    for (auto _ : state) benchmark::DoNotOptimize(diagnostics_serial(m, g));
}

void BM_Diagnostics(benchmark::State& state) {
    const LayerSpec s{1e-6};
    const Mesh1D m = shishkin(s, static_cast<std::size_t>(state.range(0)));
    const auto g = [](double x) { return 1.0 + 1e6 * std::exp(-1e6 * x); };
    for (auto _ : state) benchmark::DoNotOptimize(diagnostics(m, g));
}

SweepConfig bench_sweep() {
    SweepConfig c;
    c.N_list = {128, 256, 512};
    c.eps_list = {1e-4, 1e-6, 1e-8, 1e-10};
    return c;
}

void BM_SweepSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(bench_sweep()));
}

void BM_Sweep(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(sweep(bench_sweep()));
}

}  // namespace

BENCHMARK(BM_BlockApplySerial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_BlockApply)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_DiagnosticsSerial)->Arg(1024)->Arg(8192);
BENCHMARK(BM_Diagnostics)->Arg(1024)->Arg(8192);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
