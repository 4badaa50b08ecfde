#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gencodec/cdf.hpp"
#include "gencodec/nn.hpp"
#include "gencodec/tensor.hpp"

namespace gencodec {

// Integer symbol bounds for every coded latent channel.
inline constexpr int kSymbolLo = -64;
inline constexpr int kSymbolHi = 63;

struct RateLambdaSchedule {
    std::vector<double> lambdas; // strictly decreasing, one per rate level

    // Reference multiplier list scaled down 10x for the toy training scale.
    static RateLambdaSchedule toy();
    int levels() const { return static_cast<int>(lambdas.size()); }
};

struct CompressedLatent {
    std::vector<int> y_q; // CHW flattened main symbols
    std::vector<int> z_q; // CHW flattened hyper symbols
    int y_c = 0, y_h = 0, y_w = 0;
    int z_c = 0, z_h = 0, z_w = 0;
    int rate_level = 0;

    std::int64_t y_count() const { return static_cast<std::int64_t>(y_c) * y_h * y_w; }
    std::int64_t z_count() const { return static_cast<std::int64_t>(z_c) * z_h * z_w; }
};

struct CodecDims {
    int image_channels = 3;
    int latent_channels = 32; // C_y at H/4
    int hyper_channels = 16;  // C_z at H/16
    int width = 32;           // conv trunk width
    int rate_levels = 10;
};

// Image encoder, mean-scale hyperprior, per-level gain vectors, and the
// stage-1-only auxiliary decoder (kept in its own store so it can be saved
// and discarded separately).
class CodecModel {
public:
    CodecModel(CodecDims dims, std::uint64_t init_seed);

    const CodecDims& dims() const { return dims_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    nn::ParamStore& aux_params() { return aux_params_; }
    const nn::ParamStore& aux_params() const { return aux_params_; }

    // ---- graph builders (shared by training and the coded path)
    ag::Value* encode_graph(nn::Binding& bind, ag::Value* image) const;          // [C_y, H/4, W/4]
    ag::Value* hyper_encode_graph(nn::Binding& bind, ag::Value* y_scaled) const; // [C_z, H/16, W/16]
    // mean and (clamped) scale fields, each [C_y, H/4, W/4]
    std::pair<ag::Value*, ag::Value*> hyper_decode_graph(nn::Binding& bind, ag::Value* z_hat) const;
    ag::Value* aux_decode_graph(nn::Binding& bind, ag::Value* y_hat) const; // [3, H, W] in [0,1]
    ag::Value* gain_graph(nn::Binding& bind, int level) const;              // [C_y,1,1], > 0
    ag::Value* inverse_gain_graph(nn::Binding& bind, int level) const;
    std::pair<ag::Value*, ag::Value*> z_prior_graph(nn::Binding& bind) const; // [C_z,1,1] mean/scale

    // Sum of -log2 likelihood of `v` under per-element Gaussians, the
    // noise-relaxed rate term (no tail folding, generous floor).
    static ag::Value* gaussian_bits_graph(ag::Value* v, ag::Value* mean, ag::Value* scale);

    // ---- deterministic coded path
    CompressedLatent encode_latent(const Tensor& image, int rate_level) const;
    Tensor dequantize(const CompressedLatent& lat) const; // y_hat = y_q * inverse gain
    Tensor aux_decode(const CompressedLatent& lat) const;
    // Per-element coding tables. Main tables derive from the decoded hyper
    // latent, so encoder and decoder agree bit-exactly.
    std::vector<CdfTable> y_tables(const CompressedLatent& lat) const;
    std::vector<CdfTable> z_tables(int z_c, int z_h, int z_w) const;
    // Total estimated bits (main + hyper) under the continuous model with
    // tail folding and a 2^-16 likelihood floor, matching the tables.
    double estimate_rate(const CompressedLatent& lat) const;

    // ---- stage-1 objective for a single sample (rate in bpp units plus
    // lambda * (1 - MS-SSIM)); noise_seed fixes the quantizer relaxation so
    // gradient checks can reevaluate the identical objective. The rate term
    // always uses additive uniform noise; the distortion path uses
    // straight-through rounding when training and the same noise relaxation
    // when a finite-difference-consistent objective is needed.
    enum class QuantMode { SteRound, Noise };
    struct PretextParts {
        ag::Value* loss = nullptr;
        double bpp = 0.0;
        double distortion = 0.0; // 1 - MS-SSIM
    };
    PretextParts pretext_loss(nn::Binding& bind, const Tensor& image, int rate_level,
                              std::uint64_t noise_seed, QuantMode mode = QuantMode::SteRound) const;

    const RateLambdaSchedule& lambdas() const { return lambdas_; }

private:
    CodecDims dims_;
    RateLambdaSchedule lambdas_;
    nn::ParamStore params_;
    nn::ParamStore aux_params_;

    // encoder
    nn::Conv2d e1_;
    nn::ResBlock eres_;
    nn::Conv2d e2_;
    // hyper encoder / decoder
    nn::Conv2d h1_, h2_, h3_;
    nn::ConvT2d hd1_, hd2_;
    nn::Conv2d hd3_;
    // gains and factorized hyper prior
    nn::ParamPtr log_gain_, log_inverse_gain_; // [L, C_y]
    nn::ParamPtr z_mu_, z_log_scale_;          // [C_z]
    // auxiliary decoder
    nn::ConvT2d a1_;
    nn::ResBlock ares_;
    nn::ConvT2d a2_;
};

} // namespace gencodec
