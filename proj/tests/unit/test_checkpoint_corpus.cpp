#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gencodec/checkpoint.hpp"
#include "gencodec/corpus.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/rng.hpp"

using namespace gencodec;

namespace {
namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
        path = fs::temp_directory_path() /
               ("gencodec_test_" + std::to_string(now) + "_" + std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("checkpoint round trip with metadata") {
    TempDir tmp;
    CounterRng rng(1, 0);
    nn::ParamStore a;
    a.add("x", nn::normal_init(rng, {3, 4}, 1.0));
    a.add("y", nn::normal_init(rng, {2, 2, 2}, 0.5));
    const std::string path = (tmp.path / "m.gckp").string();
    save_checkpoint(path, a, {{"kind", "test"}, {"note", "hello"}});

    nn::ParamStore b;
    b.add("x", Tensor::zeros({3, 4}));
    b.add("y", Tensor::zeros({2, 2, 2}));
    const CheckpointMeta meta = load_checkpoint(path, b);
    CHECK(meta.at("kind") == "test");
    CHECK(meta.at("note") == "hello");
    for (std::size_t i = 0; i < a.all().size(); ++i)
        for (std::int64_t j = 0; j < a.all()[i]->value.numel(); ++j)
            CHECK(a.all()[i]->value[j] == b.all()[i]->value[j]);
}

TEST_CASE("checkpoint shape mismatch and missing tensors are typed errors") {
    TempDir tmp;
    CounterRng rng(2, 0);
    nn::ParamStore a;
    a.add("x", nn::normal_init(rng, {3, 4}, 1.0));
    const std::string path = (tmp.path / "m.gckp").string();
    save_checkpoint(path, a);

    nn::ParamStore wrong_shape;
    wrong_shape.add("x", Tensor::zeros({4, 3}));
    CHECK_THROWS_AS(load_checkpoint(path, wrong_shape), DecodeError);

    nn::ParamStore missing;
    missing.add("x", Tensor::zeros({3, 4}));
    missing.add("extra", Tensor::zeros({1}));
    CHECK_THROWS_AS(load_checkpoint(path, missing), DecodeError);
}

TEST_CASE("checkpoint writes are byte-stable, checksums match content") {
    TempDir tmp;
    CounterRng rng(3, 0);
    nn::ParamStore a;
    a.add("w", nn::normal_init(rng, {8, 8}, 1.0));
    const std::string p1 = (tmp.path / "a.gckp").string();
    const std::string p2 = (tmp.path / "b.gckp").string();
    save_checkpoint(p1, a);
    save_checkpoint(p2, a);
    CHECK(fnv1a_file(p1) == fnv1a_file(p2));

    a.all()[0]->value[0] += 1.0;
    save_checkpoint(p2, a);
    CHECK(fnv1a_file(p1) != fnv1a_file(p2));
}

TEST_CASE("corpus regeneration is byte-identical and splits are disjoint") {
    CorpusConfig cfg;
    cfg.seed = 11;
    cfg.size = 40;
    cfg.test_count = 8;
    ToyCorpus c1(cfg), c2(cfg);
    CHECK(c1.train_count() == 32);
    for (int i : {0, 5, 31}) {
        const Tensor a = c1.train_image(i);
        const Tensor b = c2.train_image(i);
        for (std::int64_t j = 0; j < a.numel(); ++j) CHECK(a[j] == b[j]);
    }
    // train images are generated from indices disjoint with test indices:
    // compare every test image against every train image for equality
    for (int t = 0; t < 4; ++t) {
        const Tensor test = c1.test_image(t);
        for (int i = 0; i < 4; ++i) {
            const Tensor train = c1.train_image(i);
            bool same = true;
            for (std::int64_t j = 0; j < test.numel() && same; ++j) same = test[j] == train[j];
            CHECK(!same);
        }
    }
}

TEST_CASE("corpus styles differ and pixels stay in range") {
    const Tensor a = ToyCorpus::synth_image(5, 3, 64, CorpusStyle::Shapes);
    const Tensor b = ToyCorpus::synth_image(5, 3, 64, CorpusStyle::Patterns);
    CHECK(a.min() >= 0.0);
    CHECK(a.max() <= 1.0);
    CHECK(b.min() >= 0.0);
    CHECK(b.max() <= 1.0);
    bool differ = false;
    for (std::int64_t j = 0; j < a.numel() && !differ; ++j) differ = a[j] != b[j];
    CHECK(differ);
}

TEST_CASE("directory ingestion loads sorted ppm files with the same split rules") {
    TempDir tmp;
    for (int i = 0; i < 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "img_%02d.ppm", i);
        write_ppm((tmp.path / name).string(), ToyCorpus::synth_image(77, i, 64, CorpusStyle::Shapes));
    }
    CorpusConfig cfg;
    cfg.size = 6;
    cfg.test_count = 2;
    cfg.image_dir = tmp.path.string();
    ToyCorpus corpus(cfg);
    CHECK(corpus.train_count() == 4);
    CHECK(corpus.test_count() == 2);
    // test images are the first files in sorted order
    const Tensor t0 = corpus.test_image(0);
    const Tensor want = read_ppm((tmp.path / "img_00.ppm").string());
    for (std::int64_t j = 0; j < t0.numel(); ++j) CHECK(t0[j] == want[j]);
}

TEST_CASE("ppm io round trips to 8-bit precision") {
    TempDir tmp;
    const Tensor img = ToyCorpus::synth_image(9, 1, 64, CorpusStyle::Shapes);
    const std::string path = (tmp.path / "img.ppm").string();
    write_ppm(path, img);
    const Tensor back = read_ppm(path);
    CHECK(back.same_shape(img));
    for (std::int64_t j = 0; j < img.numel(); ++j) CHECK(std::fabs(back[j] - img[j]) <= 0.5 / 255.0 + 1e-9);
}
