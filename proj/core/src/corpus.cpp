#include "gencodec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gencodec/errors.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

namespace {

struct Rgb {
    double r, g, b;
};

Rgb random_color(CounterRng& rng) {
    return {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
}

double smoothstep(double e0, double e1, double x) {
    const double t = std::min(1.0, std::max(0.0, (x - e0) / (e1 - e0)));
    return t * t * (3.0 - 2.0 * t);
}

void set_px(Tensor& img, int y, int x, const Rgb& c, double alpha) {
    const int S = img.dim(1);
    const std::int64_t hw = static_cast<std::int64_t>(S) * S;
    const std::int64_t i = static_cast<std::int64_t>(y) * S + x;
    double* p = img.data();
    p[i] = p[i] * (1.0 - alpha) + c.r * alpha;
    p[hw + i] = p[hw + i] * (1.0 - alpha) + c.g * alpha;
    p[2 * hw + i] = p[2 * hw + i] * (1.0 - alpha) + c.b * alpha;
}

void paint_background(Tensor& img, CounterRng& rng) {
    const int S = img.dim(1);
    const Rgb c0 = random_color(rng);
    if (rng.uniform() < 0.3) {
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) set_px(img, y, x, c0, 1.0);
        return;
    }
    const Rgb c1 = random_color(rng);
    const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979);
    const double dx = std::cos(theta), dy = std::sin(theta);
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const double t = 0.5 + ((x - S / 2.0) * dx + (y - S / 2.0) * dy) / (1.4142 * S);
            const double u = std::min(1.0, std::max(0.0, t));
            set_px(img, y, x, {c0.r + (c1.r - c0.r) * u, c0.g + (c1.g - c0.g) * u, c0.b + (c1.b - c0.b) * u}, 1.0);
        }
}

void paint_shapes(Tensor& img, CounterRng& rng) {
    const int S = img.dim(1);
    const int count = static_cast<int>(rng.uniform_int(2, 4));
    for (int k = 0; k < count; ++k) {
        const Rgb col = random_color(rng);
        const double cx = rng.uniform(0.15, 0.85) * S;
        const double cy = rng.uniform(0.15, 0.85) * S;
        if (rng.uniform() < 0.5) {
            const double r = rng.uniform(0.08, 0.28) * S;
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const double d = r - std::hypot(x - cx, y - cy);
                    const double a = smoothstep(-1.2, 1.2, d);
                    if (a > 0.0) set_px(img, y, x, col, a);
                }
        } else {
            const double hw = rng.uniform(0.08, 0.26) * S;
            const double hh = rng.uniform(0.08, 0.26) * S;
            const double ang = rng.uniform(0.0, 3.14159265358979);
            const double ca = std::cos(ang), sa = std::sin(ang);
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const double lx = (x - cx) * ca + (y - cy) * sa;
                    const double ly = -(x - cx) * sa + (y - cy) * ca;
                    const double d = std::min(hw - std::fabs(lx), hh - std::fabs(ly));
                    const double a = smoothstep(-1.2, 1.2, d);
                    if (a > 0.0) set_px(img, y, x, col, a);
                }
        }
    }
    if (rng.uniform() < 0.4) {
        // low-contrast sinusoidal texture
        const double freq = rng.uniform(2.0, 8.0) * 2.0 * 3.14159265358979 / S;
        const double theta = rng.uniform(0.0, 3.14159265358979);
        const double amp = rng.uniform(0.04, 0.12);
        const double phase = rng.uniform(0.0, 6.28);
        const double dx = std::cos(theta), dy = std::sin(theta);
        const std::int64_t hw2 = static_cast<std::int64_t>(S) * S;
        double* p = img.data();
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                const double v = amp * std::sin(freq * (x * dx + y * dy) + phase);
                const std::int64_t i = static_cast<std::int64_t>(y) * S + x;
                for (int c = 0; c < 3; ++c)
                    p[c * hw2 + i] = std::min(1.0, std::max(0.0, p[c * hw2 + i] + v));
            }
    }
}

void paint_patterns(Tensor& img, CounterRng& rng) {
    const int S = img.dim(1);
    const Rgb c0 = random_color(rng);
    const Rgb c1 = random_color(rng);
    const int kind = static_cast<int>(rng.uniform_int(0, 2));
    if (kind == 0) {
        const int cell = static_cast<int>(rng.uniform_int(4, 16));
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                set_px(img, y, x, ((x / cell + y / cell) % 2 == 0) ? c0 : c1, 1.0);
    } else if (kind == 1) {
        const double period = rng.uniform(6.0, 16.0);
        const double cx = rng.uniform(0.2, 0.8) * S;
        const double cy = rng.uniform(0.2, 0.8) * S;
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                const double t = 0.5 + 0.5 * std::sin(2.0 * 3.14159265358979 * std::hypot(x - cx, y - cy) / period);
                set_px(img, y, x, {c0.r + (c1.r - c0.r) * t, c0.g + (c1.g - c0.g) * t, c0.b + (c1.b - c0.b) * t}, 1.0);
            }
    } else {
        const double width = rng.uniform(4.0, 12.0);
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                set_px(img, y, x, (static_cast<int>(std::floor((x + y) / width)) % 2 == 0) ? c0 : c1, 1.0);
    }
    // one overlaid shape keeps the distribution from being purely periodic
    const Rgb col = random_color(rng);
    const double cx = rng.uniform(0.25, 0.75) * S;
    const double cy = rng.uniform(0.25, 0.75) * S;
    const double r = rng.uniform(0.10, 0.25) * S;
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const double a = smoothstep(-1.2, 1.2, r - std::hypot(x - cx, y - cy));
            if (a > 0.0) set_px(img, y, x, col, a);
        }
}

} // namespace

Tensor ToyCorpus::synth_image(std::uint64_t seed, int index, int size, CorpusStyle style) {
    CounterRng rng(CounterRng::mix(seed, static_cast<std::uint64_t>(index)),
                   style == CorpusStyle::Shapes ? 0x5A : 0xB7);
    Tensor img({3, size, size});
    if (style == CorpusStyle::Shapes) {
        paint_background(img, rng);
        paint_shapes(img, rng);
    } else {
        paint_patterns(img, rng);
    }
    return img;
}

ToyCorpus::ToyCorpus(CorpusConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.test_count >= cfg_.size)
        throw InvalidArgument("corpus: test split would consume the whole corpus");
    if (!cfg_.image_dir.empty()) {
        for (const auto& entry : std::filesystem::directory_iterator(cfg_.image_dir))
            if (entry.path().extension() == ".ppm") files_.push_back(entry.path().string());
        std::sort(files_.begin(), files_.end());
        if (static_cast<int>(files_.size()) < cfg_.size) cfg_.size = static_cast<int>(files_.size());
        if (cfg_.size <= cfg_.test_count)
            throw InvalidArgument("corpus: not enough images in " + cfg_.image_dir);
    }
}

int ToyCorpus::train_count() const { return cfg_.size - cfg_.test_count; }

Tensor ToyCorpus::image_at(int global_index) const {
    if (!files_.empty()) return read_ppm(files_[static_cast<std::size_t>(global_index)]);
    return synth_image(cfg_.seed, global_index, cfg_.image, cfg_.style);
}

Tensor ToyCorpus::train_image(int i) const {
    if (i < 0 || i >= train_count()) throw InvalidArgument("train_image: index out of range");
    return image_at(cfg_.test_count + i);
}

Tensor ToyCorpus::test_image(int i) const {
    if (i < 0 || i >= cfg_.test_count) throw InvalidArgument("test_image: index out of range");
    return image_at(i);
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w < 1 || h < 1)
        throw InvalidArgument(path + ": expected binary 8-bit P6 ppm");
    in.get(); // single whitespace after the header
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw InvalidArgument(path + ": truncated pixel data");
    Tensor img({3, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c)
            img[c * hw + i] = raw[static_cast<std::size_t>(i * 3 + c)] / 255.0;
    return img;
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.ndim() != 3 || image.dim(0) != 3) throw InvalidArgument("write_ppm: expected [3,H,W]");
    const int h = image.dim(1), w = image.dim(2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    std::vector<unsigned char> raw(static_cast<std::size_t>(hw) * 3);
    for (std::int64_t i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c) {
            const double v = std::min(1.0, std::max(0.0, image[c * hw + i]));
            raw[static_cast<std::size_t>(i * 3 + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

} // namespace gencodec
