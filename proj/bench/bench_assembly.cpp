#include <benchmark/benchmark.h>

#include "oamqec/channel_superop.hpp"

using namespace oamqec;

namespace {

ChannelParams channel(double z) {
    TurbulenceParams t;
    t.cn2 = 1e-14;
    return {BeamGeometry(0.01, 1e-6), t, z};
}

// args: max_in, max_out, workers (0 = all cores)
void BM_KernelAssembly(benchmark::State& state) {
    const TruncationSpec t{static_cast<int>(state.range(0)), static_cast<int>(state.range(1))};
    AssemblyOptions opts;
    opts.workers = static_cast<int>(state.range(2));
    std::size_t entries = 0;
    for (auto _ : state) {
        const auto T = assemble_superop(t, channel(500.0), opts);
        entries = T.entry_count();
        benchmark::DoNotOptimize(entries);
    }
    state.counters["entries"] = static_cast<double>(entries);
}
BENCHMARK(BM_KernelAssembly)
    ->Args({1, 1, 1})
    ->Args({1, 1, 0})
    ->Args({1, 3, 1})
    ->Args({1, 3, 0})
    ->Args({3, 6, 1})
    ->Args({3, 6, 0})
    ->Unit(benchmark::kMillisecond);

void BM_AdaptiveElement(benchmark::State& state) {
    const ElementIndex e{{1, 0}, {1, 0}, {0, 0}, {0, 0}};
    const auto params = channel(500.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(superop_element(e, params));
    }
}
BENCHMARK(BM_AdaptiveElement)->Unit(benchmark::kMillisecond);

void BM_SerialReferenceAssembly(benchmark::State& state) {
    const TruncationSpec t{1, 1};
    for (auto _ : state) {
        const auto T = assemble_superop_reference(t, channel(500.0));
        benchmark::DoNotOptimize(T.entry_count());
    }
}
BENCHMARK(BM_SerialReferenceAssembly)->Iterations(1)->Unit(benchmark::kSecond);

}  // namespace

BENCHMARK_MAIN();
