#include "gencodec/msssim.hpp"

#include <cmath>

#include "gencodec/errors.hpp"

namespace gencodec {

namespace {

// Standard five-scale exponents; truncated runs renormalize the prefix.
constexpr double kScaleWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr double kC1 = 0.01 * 0.01; // (k1 * L)^2 with L = 1
constexpr double kC2 = 0.03 * 0.03;
constexpr double kEps = 1e-8;

} // namespace

Tensor gaussian_window(int size, double sigma) {
    Tensor w({size, size});
    const double c = (size - 1) / 2.0;
    double total = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
            const double v = std::exp(-d2 / (2.0 * sigma * sigma));
            w[i * size + j] = v;
            total += v;
        }
    for (int i = 0; i < size * size; ++i) w[i] /= total;
    return w;
}

namespace ag_ms {

ag::Value* ms_ssim_op(ag::Value* a, ag::Value* b, int scales, int window) {
    if (!a->val.same_shape(b->val))
        throw InvalidArgument("ms_ssim: shape mismatch " + a->val.shape_str() + " vs " + b->val.shape_str());
    if (scales < 1 || scales > 5) throw InvalidArgument("ms_ssim: scales must be in [1,5]");

    const Tensor win = gaussian_window(window, 1.5);

    std::vector<double> weights(static_cast<std::size_t>(scales));
    double wsum = 0.0;
    for (int j = 0; j < scales; ++j) wsum += kScaleWeights[j];
    for (int j = 0; j < scales; ++j) weights[static_cast<std::size_t>(j)] = kScaleWeights[j] / wsum;

    ag::Value* result = nullptr;
    for (int j = 0; j < scales; ++j) {
        ag::Value* mu_a = ag::depthwise_valid(a, win);
        ag::Value* mu_b = ag::depthwise_valid(b, win);
        ag::Value* mu_aa = ag::square(mu_a);
        ag::Value* mu_bb = ag::square(mu_b);
        ag::Value* mu_ab = ag::mul(mu_a, mu_b);
        ag::Value* var_a = ag::sub(ag::depthwise_valid(ag::square(a), win), mu_aa);
        ag::Value* var_b = ag::sub(ag::depthwise_valid(ag::square(b), win), mu_bb);
        ag::Value* cov = ag::sub(ag::depthwise_valid(ag::mul(a, b), win), mu_ab);

        ag::Value* cs_map = ag::div(ag::add_scalar(ag::mul_scalar(cov, 2.0), kC2),
                                    ag::add_scalar(ag::add(var_a, var_b), kC2));
        ag::Value* cs = ag::clamp_min(ag::mean_all(cs_map), kEps);
        ag::Value* term = ag::pow_scalar(cs, weights[static_cast<std::size_t>(j)]);
        result = result ? ag::mul(result, term) : term;

        if (j == scales - 1) {
            ag::Value* l_map = ag::div(ag::add_scalar(ag::mul_scalar(mu_ab, 2.0), kC1),
                                       ag::add_scalar(ag::add(mu_aa, mu_bb), kC1));
            ag::Value* lum = ag::clamp_min(ag::mean_all(l_map), kEps);
            result = ag::mul(result, ag::pow_scalar(lum, weights[static_cast<std::size_t>(j)]));
        } else {
            a = ag::avg_pool2(a);
            b = ag::avg_pool2(b);
        }
    }
    return result;
}

} // namespace ag_ms

double ms_ssim(const Tensor& a, const Tensor& b, int scales) {
    if (!a.same_shape(b)) throw InvalidArgument("ms_ssim: shape mismatch");
    const int min_dim = std::min(a.dim(1), a.dim(2));
    if (min_dim < 16 * (1 << (scales - 1)))
        throw InvalidArgument("ms_ssim: image too small for " + std::to_string(scales) + " scales");
    ag::Graph g;
    ag::Value* av = g.leaf(a);
    ag::Value* bv = g.leaf(b);
    return ag_ms::ms_ssim_op(av, bv, scales, 11)->val[0];
}

} // namespace gencodec
