#pragma once

#include <functional>

#include "gencodec/tensor.hpp"

namespace gencodec {

// Deterministic perceptual distance stand-in: normalized L2 between the
// activations of a fixed-seed 3-layer random conv stack, channel-unit-
// normalized per position, averaged over layers. Zero iff inputs identical.
// No pretrained weights involved; callers wanting a real learned metric can
// pass their own PerceptualMetric wherever one is accepted.
double lpips_proxy(const Tensor& a, const Tensor& b);

using PerceptualMetric = std::function<double(const Tensor&, const Tensor&)>;

} // namespace gencodec
