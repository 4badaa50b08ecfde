#include <doctest.h>

#include <atomic>
#include <cmath>
#include <chrono>
#include <filesystem>

#include "gencodec/checkpoint.hpp"
#include "gencodec/train.hpp"

using namespace gencodec;

namespace {
namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
        path = fs::temp_directory_path() /
               ("gencodec_train_" + std::to_string(now) + "_" + std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

TrainConfig smoke_config(const TempDir& tmp) {
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.corpus_size = 40;
    cfg.test_count = 8;
    cfg.ckpt_dir = tmp.path.string();
    return cfg;
}

} // namespace

TEST_CASE("pretext smoke: 200 steps on 8x8 crops reduce the loss") {
    TempDir tmp;
    TrainConfig cfg = smoke_config(tmp);
    cfg.stage = "pretext";
    cfg.image = 8; // tiny crops make this cheap
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.steps_per_epoch = 100;
    cfg.lr = 1e-3;

    CodecModel codec(CodecDims{}, cfg.seed);

    // mean loss over the first few steps vs the last epoch
    const StageResult r = train_pretext(cfg, codec);
    REQUIRE(r.epoch_loss.size() == 2);
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    CHECK(std::isfinite(r.final_loss));
}

TEST_CASE("pretext training trace is seed-reproducible") {
    TempDir tmp1, tmp2;
    TrainConfig cfg = smoke_config(tmp1);
    cfg.stage = "pretext";
    cfg.image = 8;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.steps_per_epoch = 10;

    CodecModel c1(CodecDims{}, cfg.seed);
    const StageResult r1 = train_pretext(cfg, c1);

    TrainConfig cfg2 = cfg;
    cfg2.ckpt_dir = tmp2.path.string();
    CodecModel c2(CodecDims{}, cfg.seed);
    const StageResult r2 = train_pretext(cfg2, c2);

    REQUIRE(r1.epoch_loss.size() == r2.epoch_loss.size());
    for (std::size_t i = 0; i < r1.epoch_loss.size(); ++i) CHECK(r1.epoch_loss[i] == r2.epoch_loss[i]);
}

TEST_CASE("adapter stage freezes codec and prior checkpoints byte-for-byte") {
    TempDir tmp;
    TrainConfig cfg = smoke_config(tmp);
    cfg.stage = "adapter";
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.steps_per_epoch = 2;

    CodecModel codec(CodecDims{}, cfg.seed);
    PriorModel prior(PriorDims{}, cfg.seed);
    AdapterModel adapter(prior.tap_registry(), 32, 16, cfg.seed);

    const std::string codec_path = (tmp.path / CheckpointNames::codec).string();
    const std::string prior_path = (tmp.path / CheckpointNames::prior).string();
    save_checkpoint(codec_path, codec.params(), {{"kind", "codec"}});
    save_checkpoint(prior_path, prior.params(), {{"kind", "prior"}});
    const std::uint64_t codec_sum = fnv1a_file(codec_path);
    const std::uint64_t prior_sum = fnv1a_file(prior_path);

    // in-memory snapshots: only the adapter's parameter set may change
    const Tensor codec_param = codec.params().all()[3]->value.clone();
    const Tensor prior_param = prior.params().all()[5]->value.clone();

    const Tensor before = adapter.params().all()[0]->value.clone();
    train_adapter(cfg, codec, prior, adapter, prior_path);

    CHECK(fnv1a_file(codec_path) == codec_sum);
    CHECK(fnv1a_file(prior_path) == prior_sum);
    CHECK(fs::exists(tmp.path / CheckpointNames::adapter));
    for (std::int64_t i = 0; i < codec_param.numel(); ++i)
        CHECK(codec.params().all()[3]->value[i] == codec_param[i]);
    for (std::int64_t i = 0; i < prior_param.numel(); ++i)
        CHECK(prior.params().all()[5]->value[i] == prior_param[i]);

    // adapter parameters actually moved
    bool moved = false;
    const Tensor after = adapter.params().all()[0]->value;
    for (std::int64_t i = 0; i < after.numel() && !moved; ++i) moved = after[i] != before[i];
    CHECK(moved);

    // the recorded tuning target matches the prior checkpoint hash
    const CheckpointMeta meta = read_checkpoint_meta((tmp.path / CheckpointNames::adapter).string());
    CHECK(meta.at("prior_checksum") == to_hex(prior_sum));
}
