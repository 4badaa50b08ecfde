#include <benchmark/benchmark.h>

#include "gencodec/corpus.hpp"
#include "gencodec/pipeline.hpp"
#include "gencodec/renorm.hpp"

using namespace gencodec;

namespace {

const CodecSystem& system_fixture() {
    static CodecSystem sys{SystemConfig{}};
    return sys;
}

} // namespace

static void BM_EncodeImage(benchmark::State& state) {
    const CodecSystem& sys = system_fixture();
    const Tensor img = ToyCorpus::synth_image(1, 0, 64, CorpusStyle::Shapes);
    for (auto _ : state) benchmark::DoNotOptimize(encode_image_stream(sys, img, 4, 42));
}
BENCHMARK(BM_EncodeImage);

static void BM_DecodeLatents(benchmark::State& state) {
    const CodecSystem& sys = system_fixture();
    const Tensor img = ToyCorpus::synth_image(1, 1, 64, CorpusStyle::Shapes);
    const std::vector<std::uint8_t> stream = encode_image_stream(sys, img, 4, 42);
    for (auto _ : state) benchmark::DoNotOptimize(decode_stream_latents(sys, stream, false));
}
BENCHMARK(BM_DecodeLatents);

static void BM_ApplyRenorm(benchmark::State& state) {
    const Tensor original = ToyCorpus::synth_image(2, 0, 64, CorpusStyle::Shapes);
    const Tensor recon = ToyCorpus::synth_image(2, 1, 64, CorpusStyle::Shapes);
    const RenormParams params = compute_params(original, 16);
    for (auto _ : state) benchmark::DoNotOptimize(apply_renorm(recon, params));
}
BENCHMARK(BM_ApplyRenorm);
