#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gencodec/nn.hpp"
#include "gencodec/tensor.hpp"

namespace gencodec {

struct NoiseSchedule {
    int T = 1000;
    std::vector<double> betas;
    std::vector<double> alphas_cumprod; // strictly decreasing in (0,1)

    static NoiseSchedule linear(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02);

    // t in [1, T].
    double alpha_bar(int t) const { return alphas_cumprod[static_cast<std::size_t>(t - 1)]; }
};

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
Tensor forward_noise(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched);

struct TapSpec {
    int channels = 0, h = 0, w = 0;
};

// Optional per-site rewrite of the U-Net stream (adapter injection). Returns
// the replacement for the tapped stream value.
struct UNetControl {
    std::function<ag::Value*(nn::Binding&, int site, ag::Value* c)> inject;
};

struct PriorDims {
    int image = 64;
    int z_channels = 4; // latent 4 x image/8 x image/8
    int vae_width = 16;
    std::vector<int> unet_widths = {48, 96, 96};
    int temb_dim = 96;
};

// Frozen generative prior: toy latent autoencoder + epsilon-prediction U-Net
// with three down taps and three up taps, plus the noise schedule.
class PriorModel {
public:
    PriorModel(PriorDims dims, std::uint64_t init_seed);

    const PriorDims& dims() const { return dims_; }
    const NoiseSchedule& schedule() const { return sched_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    std::int64_t unet_param_count() const { return unet_count_; }
    const std::vector<TapSpec>& tap_registry() const { return taps_; }

    // ---- latent autoencoder
    ag::Value* vae_encode_graph(nn::Binding& bind, ag::Value* image) const; // raw latent
    ag::Value* vae_decode_graph(nn::Binding& bind, ag::Value* z) const;     // [3,H,W] in [0,1]
    // The diffusion process runs on normalized latents; the normalizer is
    // estimated from the training corpus at the end of stage 0.
    Tensor normalize_latent(const Tensor& z_raw) const;
    Tensor denormalize_latent(const Tensor& z0) const;
    void set_latent_stats(const Tensor& mu, const Tensor& sigma); // each [z_channels]

    // (z0 normalized, decoded image)
    std::pair<Tensor, Tensor> latent_autoencode(const Tensor& image) const;

    // ---- epsilon prediction
    ag::Value* unet_eps_graph(nn::Binding& bind, ag::Value* z_t, int t,
                              const UNetControl* control = nullptr) const;
    Tensor predict_eps(const Tensor& z_t, int t, const UNetControl* control = nullptr) const;

    // Deterministic DDIM (eta = 0) over a uniformly subsampled grid, starting
    // from counter-seeded Gaussian noise. Returns the final latent z0.
    Tensor ddim_sample(std::uint64_t seed, int steps, const UNetControl* control = nullptr) const;

private:
    PriorDims dims_;
    NoiseSchedule sched_;
    nn::ParamStore params_;
    std::vector<TapSpec> taps_;
    std::int64_t unet_count_ = 0;

    // vae
    nn::Conv2d ve1_, ve3_, ve5_, ve7_;
    nn::ResBlock ve2_, ve4_, ve6_;
    nn::Conv2d vd1_;
    nn::ResBlock vd2_, vd4_, vd6_;
    nn::ConvT2d vd3_, vd5_, vd7_;
    nn::Conv2d vd8_;
    nn::ParamPtr latent_mu_, latent_sigma_;

    // unet
    nn::Linear t1_, t2_;
    nn::Conv2d conv_in_;
    nn::ResBlock down0_, down1_, down2_, mid_, up0_, up1_, up2_;
    nn::Conv2d dconv0_, dconv1_;
    nn::ConvT2d uconv0_, uconv1_;
    nn::Conv2d conv_out_;

    ag::Value* time_embedding(nn::Binding& bind, int t) const; // [1, temb]
};

// Initial DDIM noise for (seed); exposed so tests can pin determinism.
Tensor seeded_gaussian(std::vector<int> shape, std::uint64_t seed, std::uint64_t stream);

} // namespace gencodec
