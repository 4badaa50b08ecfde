#include <benchmark/benchmark.h>

#include "gencodec/cdf.hpp"
#include "gencodec/rans.hpp"
#include "gencodec/rng.hpp"

using namespace gencodec;

namespace {

struct Workload {
    std::vector<CdfTable> tables;
    std::vector<int> symbols;
    std::vector<std::uint8_t> coded;
};

const Workload& workload() {
    static Workload w = [] {
        Workload out;
        CounterRng rng(1, 0);
        for (int i = 0; i < 8192; ++i) {
            out.tables.push_back(build_cdf(rng.uniform(-4.0, 4.0), rng.uniform(0.2, 4.0), -64, 63));
            out.symbols.push_back(out.tables.back().lookup(
                static_cast<std::uint32_t>(rng.uniform_int(0, kProbScale - 1))));
        }
        out.coded = range_encode(out.symbols, out.tables);
        return out;
    }();
    return w;
}

} // namespace

static void BM_BuildCdf(benchmark::State& state) {
    CounterRng rng(2, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_cdf(rng.uniform(-4.0, 4.0), rng.uniform(0.2, 4.0), -64, 63));
    }
}
BENCHMARK(BM_BuildCdf);

static void BM_RangeEncode8k(benchmark::State& state) {
    const Workload& w = workload();
    for (auto _ : state) benchmark::DoNotOptimize(range_encode(w.symbols, w.tables));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.symbols.size()));
}
BENCHMARK(BM_RangeEncode8k);

static void BM_RangeDecode8k(benchmark::State& state) {
    const Workload& w = workload();
    for (auto _ : state) benchmark::DoNotOptimize(range_decode(w.coded, w.tables));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.symbols.size()));
}
BENCHMARK(BM_RangeDecode8k);
