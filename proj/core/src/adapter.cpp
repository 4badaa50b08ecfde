#include "gencodec/adapter.hpp"

#include <cmath>

#include "gencodec/errors.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

ag::Value* scaled_dot_attention(ag::Value* q, ag::Value* k, ag::Value* v) {
    const int c = q->val.dim(1);
    ag::Value* logits = ag::mul_scalar(ag::matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(c)));
    return ag::matmul(ag::softmax_rows(logits), v);
}

AdapterModel::AdapterModel(const std::vector<TapSpec>& taps, int y_channels, int y_spatial,
                           std::uint64_t init_seed)
    : taps_(taps), y_channels_(y_channels), y_spatial_(y_spatial) {
    CounterRng rng(init_seed, 0xADA7);

    for (std::size_t i = 0; i < taps_.size(); ++i) {
        const TapSpec& tap = taps_[i];
        if (y_spatial_ % tap.h != 0)
            throw InvalidArgument("adapter: site spatial size must divide the latent size");
        const int stride = y_spatial_ / tap.h;
        // Narrower trunk at the smallest sites keeps the big patch kernels
        // from dominating the parameter budget.
        const int trunk = tap.h * tap.w <= 16 ? 8 : 16;
        const std::string name = "adapter.site" + std::to_string(i);

        const std::int64_t before = params_.count();
        Branch b;
        b.resample = nn::Conv2d(params_, name + ".resample", y_channels_, trunk, stride, stride, 0, rng);
        b.r1 = nn::ResBlock(params_, name + ".r1", trunk, trunk, rng);
        b.r2 = nn::ResBlock(params_, name + ".r2", trunk, tap.channels, rng, 0, /*k2=*/1);
        branches_.push_back(b);
        adapter_count_ += params_.count() - before;

        const std::int64_t before_fusion = params_.count();
        Fusion f;
        f.q = nn::Conv2d(params_, name + ".fuse.q", tap.channels, tap.channels, 1, 1, 0, rng);
        f.k = nn::Conv2d(params_, name + ".fuse.k", tap.channels, tap.channels, 1, 1, 0, rng);
        f.v = nn::Conv2d(params_, name + ".fuse.v", tap.channels, tap.channels, 1, 1, 0, rng);
        f.fc = nn::Linear(params_, name + ".fuse.fc", tap.channels, tap.channels, rng, 0.5);
        f.zero_proj = nn::Conv2d(params_, name + ".fuse.out", tap.channels, tap.channels, 1, 1, 0, rng);
        f.zero_proj.w->value.zero(); // untouched prior at the start of tuning
        fusions_.push_back(f);
        fusion_count_ += params_.count() - before_fusion;
    }
}

std::vector<ag::Value*> AdapterModel::adapt_graph(nn::Binding& bind, ag::Value* y_hat) const {
    if (y_hat->val.dim(0) != y_channels_ || y_hat->val.dim(1) != y_spatial_ ||
        y_hat->val.dim(2) != y_spatial_)
        throw InvalidArgument("adapt: latent shape " + y_hat->val.shape_str() +
                              " does not match the adapter configuration");
    std::vector<ag::Value*> out;
    out.reserve(branches_.size());
    for (const Branch& b : branches_) {
        ag::Value* h = b.resample(bind, y_hat);
        h = b.r1(bind, h);
        h = b.r2(bind, h);
        out.push_back(h);
    }
    return out;
}

ag::Value* AdapterModel::fuse_graph(nn::Binding& bind, int site, ag::Value* c, ag::Value* f) const {
    if (!c->val.same_shape(f->val))
        throw InvalidArgument("fuse: tap/feature shape mismatch " + c->val.shape_str() + " vs " +
                              f->val.shape_str());
    const Fusion& fu = fusions_[static_cast<std::size_t>(site)];
    const int C = c->val.dim(0), H = c->val.dim(1), W = c->val.dim(2);

    ag::Value* base = ag::add(c, f);
    ag::Value* q = ag::chw_to_tokens(fu.q(bind, base));
    ag::Value* k = ag::chw_to_tokens(fu.k(bind, f));
    ag::Value* v = ag::chw_to_tokens(fu.v(bind, f));
    ag::Value* attended = scaled_dot_attention(q, k, v);
    ag::Value* fused = ag::add(v, fu.fc(bind, attended));
    return ag::tokens_to_chw(fused, C, H, W);
}

ag::Value* AdapterModel::inject_graph(nn::Binding& bind, int site, ag::Value* c, ag::Value* fused) const {
    const Fusion& fu = fusions_[static_cast<std::size_t>(site)];
    return ag::add(c, fu.zero_proj(bind, fused));
}

ControlFeatureSet AdapterModel::adapt(const Tensor& y_hat) const {
    ag::Graph g;
    nn::Binding bind(g);
    std::vector<ag::Value*> feats = adapt_graph(bind, g.leaf(y_hat));
    ControlFeatureSet set;
    set.features.reserve(feats.size());
    for (ag::Value* f : feats) set.features.push_back(f->val.clone());
    return set;
}

UNetControl AdapterModel::make_control(const ControlFeatureSet& f, FusionMode mode) const {
    if (mode == FusionMode::None) return UNetControl{};
    if (f.features.size() != taps_.size())
        throw InvalidArgument("make_control: expected " + std::to_string(taps_.size()) +
                              " features, got " + std::to_string(f.features.size()));
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        const Tensor& t = f.features[i];
        if (t.dim(0) != taps_[i].channels || t.dim(1) != taps_[i].h || t.dim(2) != taps_[i].w)
            throw InvalidArgument("make_control: feature " + std::to_string(i) + " has shape " +
                                  t.shape_str());
    }

    ControlFeatureSet captured = f; // tensors share storage, cheap copy
    const AdapterModel* self = this;
    UNetControl ctl;
    ctl.inject = [self, captured, mode](nn::Binding& bind, int site, ag::Value* c) -> ag::Value* {
        ag::Value* feat = bind.graph().leaf(captured.features[static_cast<std::size_t>(site)]);
        switch (mode) {
            case FusionMode::Additive:
                return ag::add(c, feat);
            case FusionMode::ZeroFused: {
                ag::Value* zero = bind.graph().leaf(Tensor::zeros(c->val.shape()));
                return self->inject_graph(bind, site, c, zero);
            }
            case FusionMode::Attentive:
            default:
                return self->inject_graph(bind, site, c, self->fuse_graph(bind, site, c, feat));
        }
    };
    return ctl;
}

UNetControl AdapterModel::make_control_graph(std::vector<ag::Value*> feats, FusionMode mode) const {
    if (mode == FusionMode::None) return UNetControl{};
    if (feats.size() != taps_.size())
        throw InvalidArgument("make_control_graph: feature count mismatch");
    const AdapterModel* self = this;
    UNetControl ctl;
    ctl.inject = [self, feats = std::move(feats), mode](nn::Binding& bind, int site,
                                                        ag::Value* c) -> ag::Value* {
        ag::Value* feat = feats[static_cast<std::size_t>(site)];
        switch (mode) {
            case FusionMode::Additive:
                return ag::add(c, feat);
            case FusionMode::ZeroFused: {
                ag::Value* zero = bind.graph().leaf(Tensor::zeros(c->val.shape()));
                return self->inject_graph(bind, site, c, zero);
            }
            case FusionMode::Attentive:
            default:
                return self->inject_graph(bind, site, c, self->fuse_graph(bind, site, c, feat));
        }
    };
    return ctl;
}

Tensor predict_eps_conditioned(const PriorModel& prior, const AdapterModel& adapter,
                               const Tensor& z_t, int t, const ControlFeatureSet& control,
                               FusionMode mode) {
    UNetControl ctl = adapter.make_control(control, mode);
    return prior.predict_eps(z_t, t, mode == FusionMode::None ? nullptr : &ctl);
}

} // namespace gencodec
