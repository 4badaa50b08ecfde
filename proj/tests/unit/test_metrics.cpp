#include <doctest.h>

#include <cmath>

#include "gencodec/corpus.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/metrics.hpp"
#include "gencodec/rng.hpp"

using namespace gencodec;

namespace {

Tensor box_blur(const Tensor& img, int radius) {
    const int h = img.dim(1), w = img.dim(2);
    Tensor out({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                int n = 0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        s += img.at(c, yy, xx);
                        ++n;
                    }
                out.at(c, y, x) = s / n;
            }
    return out;
}

} // namespace

TEST_CASE("proxy is zero at identity, symmetric, nonnegative") {
    const Tensor a = ToyCorpus::synth_image(1, 0, 64, CorpusStyle::Shapes);
    const Tensor b = ToyCorpus::synth_image(1, 1, 64, CorpusStyle::Shapes);
    CHECK(lpips_proxy(a, a) == 0.0);
    CHECK(lpips_proxy(a, b) > 0.0);
    CHECK(std::fabs(lpips_proxy(a, b) - lpips_proxy(b, a)) < 1e-9);
    CHECK_THROWS_AS(lpips_proxy(a, Tensor({3, 32, 32})), InvalidArgument);
}

TEST_CASE("proxy is deterministic across calls") {
    const Tensor a = ToyCorpus::synth_image(2, 0, 64, CorpusStyle::Shapes);
    const Tensor b = ToyCorpus::synth_image(2, 3, 64, CorpusStyle::Shapes);
    CHECK(lpips_proxy(a, b) == lpips_proxy(a, b));
}

TEST_CASE("blur ranking: slight blur closer than heavy blur for >= 95% of images") {
    int correct = 0;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        const Tensor img = ToyCorpus::synth_image(99, i, 64, CorpusStyle::Shapes);
        const double slight = lpips_proxy(img, box_blur(img, 1));
        const double heavy = lpips_proxy(img, box_blur(img, 4));
        if (slight < heavy) ++correct;
    }
    CHECK(static_cast<double>(correct) / n >= 0.95);
}
