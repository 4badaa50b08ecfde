#pragma once

#include "gencodec/autograd.hpp"
#include "gencodec/tensor.hpp"

namespace gencodec {

// 2-d Gaussian window, normalized to unit sum.
Tensor gaussian_window(int size, double sigma);

// Multi-scale structural similarity between images in [0,1], CHW layout.
// Contrast-structure terms at every scale, luminance at the coarsest, the
// per-scale exponents renormalized from the standard five-scale weights.
// Requires identical shapes and min(H,W) >= 16 * 2^(scales-1).
double ms_ssim(const Tensor& a, const Tensor& b, int scales = 3);

namespace ag_ms {
// Graph form used inside training losses. `window` may be shrunk below 11
// for small crops; the public ms_ssim always uses 11.
ag::Value* ms_ssim_op(ag::Value* a, ag::Value* b, int scales, int window = 11);
}

} // namespace gencodec
