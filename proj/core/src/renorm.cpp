#include "gencodec/renorm.hpp"

#include <algorithm>
#include <cmath>

#include "gencodec/bitio.hpp"
#include "gencodec/errors.hpp"

namespace gencodec {

namespace {

constexpr double kSigmaFloor = 1e-4; // guards flat reconstruction blocks

struct BlockStats {
    double mean = 0.0;
    double std_dev = 0.0; // population
};

BlockStats block_stats(const Tensor& img, int c, int y0, int y1, int x0, int x1) {
    const int W = img.dim(2);
    double sum = 0.0, sq = 0.0;
    const double n = static_cast<double>((y1 - y0) * (x1 - x0));
    for (int y = y0; y < y1; ++y) {
        const double* row = img.data() + (static_cast<std::int64_t>(c) * img.dim(1) + y) * W;
        for (int x = x0; x < x1; ++x) {
            sum += row[x];
            sq += row[x] * row[x];
        }
    }
    BlockStats s;
    s.mean = sum / n;
    const double var = std::max(0.0, sq / n - s.mean * s.mean);
    s.std_dev = std::sqrt(var);
    return s;
}

} // namespace

std::uint8_t RenormParams::quantize_mu(double mu) {
    const double v = std::min(kMuHi, std::max(0.0, mu));
    return static_cast<std::uint8_t>(std::lround(v / kMuHi * (kLevels - 1)));
}

std::uint8_t RenormParams::quantize_sigma(double sigma) {
    const double v = std::min(kSigmaHi, std::max(0.0, sigma));
    return static_cast<std::uint8_t>(std::lround(v / kSigmaHi * (kLevels - 1)));
}

double RenormParams::dequantize_mu(std::uint8_t code) {
    return static_cast<double>(code) * kMuHi / (kLevels - 1);
}

double RenormParams::dequantize_sigma(std::uint8_t code) {
    return static_cast<double>(code) * kSigmaHi / (kLevels - 1);
}

RenormParams compute_params(const Tensor& image, int block_size) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw InvalidArgument("compute_params: expected [3,H,W] image");
    if (block_size < 1 || block_size > 255)
        throw InvalidArgument("compute_params: block size must be in [1,255]");
    const int H = image.dim(1), W = image.dim(2);

    RenormParams p;
    p.block_size = block_size;
    p.grid_h = (H + block_size - 1) / block_size;
    p.grid_w = (W + block_size - 1) / block_size;
    p.mu_code.resize(p.cell_count());
    p.sigma_code.resize(p.cell_count());

    for (int by = 0; by < p.grid_h; ++by)
        for (int bx = 0; bx < p.grid_w; ++bx) {
            const int y0 = by * block_size, y1 = std::min(H, y0 + block_size);
            const int x0 = bx * block_size, x1 = std::min(W, x0 + block_size);
            for (int c = 0; c < 3; ++c) {
                const BlockStats s = block_stats(image, c, y0, y1, x0, x1);
                p.mu_code[p.index(by, bx, c)] = RenormParams::quantize_mu(s.mean);
                p.sigma_code[p.index(by, bx, c)] = RenormParams::quantize_sigma(s.std_dev);
            }
        }
    return p;
}

Tensor apply_renorm(const Tensor& recon, const RenormParams& params) {
    if (recon.ndim() != 3 || recon.dim(0) != 3)
        throw InvalidArgument("apply_renorm: expected [3,H,W] image");
    const int H = recon.dim(1), W = recon.dim(2);
    const int bs = params.block_size;
    if (params.grid_h != (H + bs - 1) / bs || params.grid_w != (W + bs - 1) / bs)
        throw InvalidArgument("apply_renorm: parameter grid does not match image dims");

    Tensor out = recon.clone();
    for (int by = 0; by < params.grid_h; ++by)
        for (int bx = 0; bx < params.grid_w; ++bx) {
            const int y0 = by * bs, y1 = std::min(H, y0 + bs);
            const int x0 = bx * bs, x1 = std::min(W, x0 + bs);
            for (int c = 0; c < 3; ++c) {
                const BlockStats local = block_stats(recon, c, y0, y1, x0, x1);
                const double target_mu = RenormParams::dequantize_mu(params.mu_code[params.index(by, bx, c)]);
                const double target_sigma =
                    RenormParams::dequantize_sigma(params.sigma_code[params.index(by, bx, c)]);
                const double gain = target_sigma / std::max(local.std_dev, kSigmaFloor);
                for (int y = y0; y < y1; ++y) {
                    double* row = out.data() + (static_cast<std::int64_t>(c) * H + y) * W;
                    for (int x = x0; x < x1; ++x) {
                        const double v = (row[x] - local.mean) * gain + target_mu;
                        row[x] = std::min(1.0, std::max(0.0, v));
                    }
                }
            }
        }
    return out;
}

std::vector<std::uint8_t> serialize_params(const RenormParams& params) {
    if (params.grid_h < 1 || params.grid_w < 1)
        throw InvalidArgument("serialize_params: empty grid");
    BitWriter bw;
    bw.put_bits(static_cast<std::uint32_t>(params.block_size), 8);
    bw.put_bits(static_cast<std::uint32_t>(params.grid_h), 16);
    bw.put_bits(static_cast<std::uint32_t>(params.grid_w), 16);
    for (std::size_t i = 0; i < params.cell_count(); ++i) {
        bw.put_bits(params.mu_code[i], 6);
        bw.put_bits(params.sigma_code[i], 6);
    }
    return bw.finish();
}

RenormParams deserialize_params(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 5)
        throw DecodeError(DecodeFault::Truncated, bytes.size(), "renorm payload shorter than header");
    BitReader br(bytes.data(), bytes.size());
    RenormParams p;
    p.block_size = static_cast<int>(br.get_bits(8));
    p.grid_h = static_cast<int>(br.get_bits(16));
    p.grid_w = static_cast<int>(br.get_bits(16));
    if (p.block_size < 1)
        throw DecodeError(DecodeFault::CorruptPayload, 0, "renorm block size zero");
    if (p.grid_h < 1 || p.grid_w < 1)
        throw DecodeError(DecodeFault::CorruptPayload, 1, "renorm grid empty");

    const std::size_t expected = 5 + (p.cell_count() * 2 * 6 + 7) / 8;
    if (bytes.size() != expected)
        throw DecodeError(DecodeFault::BadLength, bytes.size(),
                          "renorm payload length " + std::to_string(bytes.size()) + ", expected " +
                              std::to_string(expected));

    p.mu_code.resize(p.cell_count());
    p.sigma_code.resize(p.cell_count());
    for (std::size_t i = 0; i < p.cell_count(); ++i) {
        p.mu_code[i] = static_cast<std::uint8_t>(br.get_bits(6));
        p.sigma_code[i] = static_cast<std::uint8_t>(br.get_bits(6));
    }
    return p;
}

} // namespace gencodec
