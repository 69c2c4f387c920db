// Serial reference vs OpenMP vs FFT kernels.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "stochgain/evolution.hpp"
#include "stochgain/kernels.hpp"
#include "stochgain/montecarlo.hpp"

using namespace stochgain;

namespace {

std::vector<double> density(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(gen);
    return v;
}

template <auto Convolve>
void BM_convolve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = density(n, 1);
    const auto b = density(n / 4, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Convolve(a, b));
    state.SetComplexityN(state.range(0));
}

void BM_convolve_serial(benchmark::State& s) { BM_convolve<kernels::convolve_serial>(s); }
void BM_convolve_omp(benchmark::State& s) { BM_convolve<kernels::convolve_omp>(s); }
void BM_convolve_fft(benchmark::State& s) { BM_convolve<kernels::convolve_fft>(s); }

void BM_simulate(benchmark::State& state, Exec exec) {
    const auto spec = DistributionSpec::lognormal_from_moments(1.0283, 0.4389);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_terminal(spec, n, 100, 7, exec));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 100);
}

void BM_evolve_sech(benchmark::State& state, ConvolutionMethod method) {
    const auto g = alpha_grid(DistributionSpec::half_cauchy(0.75), 0.02);
    GridEvolveOptions opt;
    opt.method = method;
    for (auto _ : state) benchmark::DoNotOptimize(evolve_grid(g, static_cast<std::size_t>(state.range(0)), opt));
}

}  // namespace

BENCHMARK(BM_convolve_serial)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_convolve_omp)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_convolve_fft)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_simulate, serial, Exec::serial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_simulate, parallel, Exec::parallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_evolve_sech, direct, ConvolutionMethod::direct)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_evolve_sech, fft, ConvolutionMethod::fft)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
