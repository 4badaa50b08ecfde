#pragma once

#include <cstdint>
#include <vector>

#include "gencodec/tensor.hpp"

namespace gencodec {

// Block-wise channel moment matching in the pixel domain. The transmitted
// side channel carries the original image's per-block per-channel mean and
// population std, uniformly quantized to 6-bit codes. Means live in [0,1];
// stds in [0,0.5] (a [0,1]-valued channel cannot exceed that).
struct RenormParams {
    int block_size = 16;
    int grid_h = 0, grid_w = 0;          // block counts, edge blocks partial
    std::vector<std::uint8_t> mu_code;    // [grid_h*grid_w*3], codes in [0,63]
    std::vector<std::uint8_t> sigma_code; // same layout

    static constexpr int kLevels = 64;
    static constexpr double kMuHi = 1.0;
    static constexpr double kSigmaHi = 0.5;

    std::size_t cell_count() const { return static_cast<std::size_t>(grid_h) * grid_w * 3; }
    std::size_t index(int by, int bx, int c) const {
        return (static_cast<std::size_t>(by) * grid_w + bx) * 3 + static_cast<std::size_t>(c);
    }

    static std::uint8_t quantize_mu(double mu);
    static std::uint8_t quantize_sigma(double sigma);
    static double dequantize_mu(std::uint8_t code);
    static double dequantize_sigma(std::uint8_t code);

    // Side-channel cost of the packed codes alone (no header), in bits.
    std::int64_t code_bits() const { return static_cast<std::int64_t>(cell_count()) * 2 * 6; }
};

RenormParams compute_params(const Tensor& image, int block_size);

// Matches each reconstruction block's local moments to the transmitted
// (dequantized) targets; output clamped to [0,1].
Tensor apply_renorm(const Tensor& recon, const RenormParams& params);

// Fixed layout: block_size u8, grid_h u16, grid_w u16 (big-endian), then
// row-major blocks x channels x (mu code, sigma code) packed 6 bits each,
// MSB-first, zero padded to a byte boundary.
std::vector<std::uint8_t> serialize_params(const RenormParams& params);
RenormParams deserialize_params(const std::vector<std::uint8_t>& bytes);

} // namespace gencodec
