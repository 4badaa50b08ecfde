#include "gencodec/metrics.hpp"

#include <cmath>
#include <mutex>

#include "gencodec/autograd.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/nn.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

namespace {

constexpr std::uint64_t kProxySeed = 0x4C504950; // fixed: the stack is part of the metric
const int kLayerCh[4] = {3, 16, 32, 64};

struct ProxyStack {
    nn::ParamStore params;
    std::vector<nn::Conv2d> convs;

    ProxyStack() {
        CounterRng rng(kProxySeed, 0);
        for (int l = 0; l < 3; ++l)
            convs.emplace_back(params, "proxy.c" + std::to_string(l), kLayerCh[l], kLayerCh[l + 1], 3,
                               2, 1, rng);
        params.freeze();
    }
};

const ProxyStack& proxy_stack() {
    static ProxyStack stack;
    return stack;
}

// Channel-unit-normalized feature map distance, averaged over positions.
double layer_distance(const Tensor& fa, const Tensor& fb) {
    const int c = fa.dim(0), h = fa.dim(1), w = fa.dim(2);
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    double total = 0.0;
    for (std::int64_t p = 0; p < hw; ++p) {
        double na = 0.0, nb = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            na += fa[ci * hw + p] * fa[ci * hw + p];
            nb += fb[ci * hw + p] * fb[ci * hw + p];
        }
        na = std::sqrt(na) + 1e-10;
        nb = std::sqrt(nb) + 1e-10;
        for (int ci = 0; ci < c; ++ci) {
            const double d = fa[ci * hw + p] / na - fb[ci * hw + p] / nb;
            total += d * d;
        }
    }
    return total / (static_cast<double>(hw) * c);
}

std::vector<Tensor> proxy_features(const Tensor& img) {
    const ProxyStack& stack = proxy_stack();
    ag::Graph g;
    nn::Binding bind(g);
    ag::Value* h = g.leaf(img);
    std::vector<Tensor> feats;
    for (const auto& conv : stack.convs) {
        h = ag::leaky_relu(conv(bind, h), 0.2);
        feats.push_back(h->val);
    }
    return feats;
}

} // namespace

double lpips_proxy(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw InvalidArgument("lpips_proxy: shape mismatch");
    const std::vector<Tensor> fa = proxy_features(a);
    const std::vector<Tensor> fb = proxy_features(b);
    double total = 0.0;
    for (std::size_t l = 0; l < fa.size(); ++l) total += layer_distance(fa[l], fb[l]);
    return total / static_cast<double>(fa.size());
}

} // namespace gencodec
