#pragma once

#include <cstdint>
#include <vector>

#include "gencodec/diffusion.hpp"
#include "gencodec/nn.hpp"
#include "gencodec/tensor.hpp"

namespace gencodec {

// One adapter feature per U-Net injection site.
struct ControlFeatureSet {
    std::vector<Tensor> features;
};

enum class FusionMode {
    Attentive, // fuse via cross-attention, inject residually (default path)
    Additive,  // c + f directly, bypassing the attention block
    ZeroFused, // inject with the fused feature zeroed (ablation)
    None,      // skip injection entirely: the unconditional prior
};

// Scaled dot-product attention over token matrices [HW, C]; softmax across
// the key axis. Exposed so the arithmetic can be checked directly.
ag::Value* scaled_dot_attention(ag::Value* q, ag::Value* k, ag::Value* v);

// Latent adapter (per-site resampling conv + two residual blocks) plus the
// per-site attentive fusion parameters (Q/K/V 1x1 convs, per-position FC,
// zero-initialized output projection).
class AdapterModel {
public:
    AdapterModel(const std::vector<TapSpec>& taps, int y_channels, int y_spatial,
                 std::uint64_t init_seed);

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    int site_count() const { return static_cast<int>(taps_.size()); }
    const std::vector<TapSpec>& taps() const { return taps_; }

    // Scalar parameter counts of the feature branches (the adapter proper)
    // and of the fusion blocks.
    std::int64_t adapter_param_count() const { return adapter_count_; }
    std::int64_t fusion_param_count() const { return fusion_count_; }

    // ---- graph builders
    std::vector<ag::Value*> adapt_graph(nn::Binding& bind, ag::Value* y_hat) const;
    // base = c + f; Q from base, K/V from f; out = V + FC(Attn(Q,K,V))
    ag::Value* fuse_graph(nn::Binding& bind, int site, ag::Value* c, ag::Value* f) const;
    // c + zero-initialized projection(fused)
    ag::Value* inject_graph(nn::Binding& bind, int site, ag::Value* c, ag::Value* fused) const;

    // ---- eval conveniences
    ControlFeatureSet adapt(const Tensor& y_hat) const;

    // Builds the per-site U-Net hook for a fixed feature set. The feature
    // tensors are captured by value; `mode` selects the ablation variant.
    UNetControl make_control(const ControlFeatureSet& f, FusionMode mode = FusionMode::Attentive) const;

    // Same hook over live graph values, so gradients flow back into the
    // adapter branches during stage-2 training.
    UNetControl make_control_graph(std::vector<ag::Value*> feats,
                                   FusionMode mode = FusionMode::Attentive) const;

private:
    struct Branch {
        nn::Conv2d resample; // k = stride patches, 32 -> trunk width
        nn::ResBlock r1, r2; // trunk, then bottleneck lift to site channels
    };
    struct Fusion {
        nn::Conv2d q, k, v;   // 1x1, site channels preserved
        nn::Linear fc;        // per-position C -> C
        nn::Conv2d zero_proj; // 1x1, zero-initialized
    };

    std::vector<TapSpec> taps_;
    int y_channels_;
    int y_spatial_;
    nn::ParamStore params_;
    std::vector<Branch> branches_;
    std::vector<Fusion> fusions_;
    std::int64_t adapter_count_ = 0;
    std::int64_t fusion_count_ = 0;
};

// Full conditional noise prediction: adapt the decoded latent, fuse at every
// site, predict. `y_hat` is codec_core's dequantized latent.
Tensor predict_eps_conditioned(const PriorModel& prior, const AdapterModel& adapter,
                               const Tensor& z_t, int t, const ControlFeatureSet& control,
                               FusionMode mode = FusionMode::Attentive);

} // namespace gencodec
