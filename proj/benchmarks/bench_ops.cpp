#include <benchmark/benchmark.h>

#include "gencodec/autograd.hpp"
#include "gencodec/diffusion.hpp"
#include "gencodec/msssim.hpp"
#include "gencodec/nn.hpp"
#include "gencodec/rng.hpp"

using namespace gencodec;

static void BM_Conv2d32x32(benchmark::State& state) {
    const Tensor x = seeded_gaussian({32, 32, 32}, 1, 0);
    const Tensor w = seeded_gaussian({32, 32, 3, 3}, 2, 0);
    const Tensor b = seeded_gaussian({32}, 3, 0);
    for (auto _ : state) {
        ag::Graph g;
        benchmark::DoNotOptimize(ag::conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1)->val.data());
    }
}
BENCHMARK(BM_Conv2d32x32);

static void BM_Conv2dBackward(benchmark::State& state) {
    const Tensor x = seeded_gaussian({32, 32, 32}, 1, 0);
    const Tensor w = seeded_gaussian({32, 32, 3, 3}, 2, 0);
    const Tensor b = seeded_gaussian({32}, 3, 0);
    for (auto _ : state) {
        ag::Graph g;
        ag::Value* xv = g.leaf(x, true);
        ag::Value* wv = g.leaf(w, true);
        ag::Value* loss = ag::mean_all(ag::square(ag::conv2d(xv, wv, g.leaf(b), 1, 1)));
        g.backward(loss);
        benchmark::DoNotOptimize(wv->grad.data());
    }
}
BENCHMARK(BM_Conv2dBackward);

static void BM_MsSsim64(benchmark::State& state) {
    const Tensor a = seeded_gaussian({3, 64, 64}, 4, 0);
    const Tensor b = seeded_gaussian({3, 64, 64}, 5, 0);
    for (auto _ : state) {
        ag::Graph g;
        benchmark::DoNotOptimize(ag_ms::ms_ssim_op(g.leaf(a), g.leaf(b), 3, 11)->val[0]);
    }
}
BENCHMARK(BM_MsSsim64);

static void BM_UNetForward(benchmark::State& state) {
    static PriorModel prior(PriorDims{}, 6);
    const Tensor z = seeded_gaussian({4, 8, 8}, 7, 0);
    for (auto _ : state) benchmark::DoNotOptimize(prior.predict_eps(z, 500).data());
}
BENCHMARK(BM_UNetForward);
