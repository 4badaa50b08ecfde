#include "gencodec/codec.hpp"

#include <cmath>

#include "gencodec/errors.hpp"
#include "gencodec/msssim.hpp"
#include "gencodec/rans.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTrainLikelihoodFloor = 1e-9;
constexpr double kLog2 = 0.69314718055994530942;

// Quantizes a graph output to integer symbols, rejecting anything outside
// the declared coder range.
std::vector<int> quantize_symbols(const Tensor& v, const char* what) {
    std::vector<int> q(static_cast<std::size_t>(v.numel()));
    const double* p = v.data();
    for (std::int64_t i = 0; i < v.numel(); ++i) {
        const double r = std::round(p[i]);
        if (r < kSymbolLo || r > kSymbolHi)
            throw InvalidArgument(std::string(what) + ": latent symbol " + std::to_string(r) +
                                  " outside [" + std::to_string(kSymbolLo) + "," +
                                  std::to_string(kSymbolHi) + "] at index " + std::to_string(i));
        q[static_cast<std::size_t>(i)] = static_cast<int>(r);
    }
    return q;
}

Tensor uniform_noise(std::vector<int> shape, std::uint64_t seed, std::uint64_t stream) {
    CounterRng rng(seed, stream);
    Tensor t(std::move(shape));
    double* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i) p[i] = rng.uniform() - 0.5;
    return t;
}

} // namespace

RateLambdaSchedule RateLambdaSchedule::toy() {
    RateLambdaSchedule s;
    s.lambdas = {5.0, 1.6, 0.3, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001, 0.0005};
    return s;
}

CodecModel::CodecModel(CodecDims dims, std::uint64_t init_seed) : dims_(dims), lambdas_(RateLambdaSchedule::toy()) {
    CounterRng rng(init_seed, 0xC0DEC);
    const int W = dims_.width;
    const int Cy = dims_.latent_channels;
    const int Cz = dims_.hyper_channels;
    const int L = dims_.rate_levels;

    e1_ = nn::Conv2d(params_, "enc.c1", dims_.image_channels, W, 3, 2, 1, rng);
    eres_ = nn::ResBlock(params_, "enc.res", W, W, rng);
    e2_ = nn::Conv2d(params_, "enc.c2", W, Cy, 3, 2, 1, rng, 0.5);

    h1_ = nn::Conv2d(params_, "hyper_enc.c1", Cy, W, 3, 1, 1, rng);
    h2_ = nn::Conv2d(params_, "hyper_enc.c2", W, W, 3, 2, 1, rng);
    h3_ = nn::Conv2d(params_, "hyper_enc.c3", W, Cz, 3, 2, 1, rng, 0.5);

    hd1_ = nn::ConvT2d(params_, "hyper_dec.c1", Cz, W, 4, 2, 1, rng);
    hd2_ = nn::ConvT2d(params_, "hyper_dec.c2", W, W, 4, 2, 1, rng);
    hd3_ = nn::Conv2d(params_, "hyper_dec.c3", W, 2 * Cy, 3, 1, 1, rng, 0.5);

    // Geometric gain ramp: level 0 (largest lambda) keeps the finest
    // quantization, level L-1 the coarsest.
    Tensor lg({L, Cy});
    Tensor lig({L, Cy});
    const double g0 = 1.2, gL = 0.10;
    for (int s = 0; s < L; ++s) {
        const double g = g0 * std::pow(gL / g0, static_cast<double>(s) / (L - 1));
        for (int c = 0; c < Cy; ++c) {
            lg[s * Cy + c] = std::log(g);
            lig[s * Cy + c] = -std::log(g);
        }
    }
    log_gain_ = params_.add("gain.log_scale", std::move(lg));
    log_inverse_gain_ = params_.add("gain.log_inverse_scale", std::move(lig));

    z_mu_ = params_.add("z_prior.mu", Tensor::zeros({Cz}));
    z_log_scale_ = params_.add("z_prior.log_scale", Tensor::zeros({Cz}));

    a1_ = nn::ConvT2d(aux_params_, "aux.c1", Cy, W, 4, 2, 1, rng);
    ares_ = nn::ResBlock(aux_params_, "aux.res", W, W, rng);
    a2_ = nn::ConvT2d(aux_params_, "aux.c2", W, dims_.image_channels, 4, 2, 1, rng);
}

ag::Value* CodecModel::encode_graph(nn::Binding& bind, ag::Value* image) const {
    ag::Value* h = ag::silu(e1_(bind, image));
    h = eres_(bind, h);
    return e2_(bind, h);
}

ag::Value* CodecModel::hyper_encode_graph(nn::Binding& bind, ag::Value* y_scaled) const {
    ag::Value* h = ag::silu(h1_(bind, ag::abs_op(y_scaled)));
    h = ag::silu(h2_(bind, h));
    return h3_(bind, h);
}

std::pair<ag::Value*, ag::Value*> CodecModel::hyper_decode_graph(nn::Binding& bind, ag::Value* z_hat) const {
    ag::Value* h = ag::silu(hd1_(bind, z_hat));
    h = ag::silu(hd2_(bind, h));
    ag::Value* out = hd3_(bind, h);
    const int Cy = dims_.latent_channels;
    ag::Value* mean = ag::slice_ch(out, 0, Cy);
    ag::Value* raw = ag::slice_ch(out, Cy, 2 * Cy);
    ag::Value* scale = ag::clamp_min(ag::exp_op(ag::clamp(raw, -10.0, 5.0)), kScaleMin);
    return {mean, scale};
}

ag::Value* CodecModel::aux_decode_graph(nn::Binding& bind, ag::Value* y_hat) const {
    ag::Value* h = ag::silu(a1_(bind, y_hat));
    h = ares_(bind, h);
    return ag::sigmoid(a2_(bind, h));
}

ag::Value* CodecModel::gain_graph(nn::Binding& bind, int level) const {
    if (level < 0 || level >= dims_.rate_levels)
        throw InvalidArgument("rate level " + std::to_string(level) + " outside [0," +
                              std::to_string(dims_.rate_levels - 1) + "]");
    const int Cy = dims_.latent_channels;
    ag::Value* table = ag::reshape(bind(log_gain_), {dims_.rate_levels, Cy, 1});
    ag::Value* row = ag::slice_ch(table, level, level + 1);
    return ag::exp_op(ag::reshape(row, {Cy, 1, 1}));
}

ag::Value* CodecModel::inverse_gain_graph(nn::Binding& bind, int level) const {
    if (level < 0 || level >= dims_.rate_levels)
        throw InvalidArgument("rate level " + std::to_string(level) + " outside [0," +
                              std::to_string(dims_.rate_levels - 1) + "]");
    const int Cy = dims_.latent_channels;
    ag::Value* table = ag::reshape(bind(log_inverse_gain_), {dims_.rate_levels, Cy, 1});
    ag::Value* row = ag::slice_ch(table, level, level + 1);
    return ag::exp_op(ag::reshape(row, {Cy, 1, 1}));
}

std::pair<ag::Value*, ag::Value*> CodecModel::z_prior_graph(nn::Binding& bind) const {
    const int Cz = dims_.hyper_channels;
    ag::Value* mu = ag::reshape(bind(z_mu_), {Cz, 1, 1});
    ag::Value* scale = ag::clamp_min(
        ag::exp_op(ag::clamp(ag::reshape(bind(z_log_scale_), {Cz, 1, 1}), -10.0, 5.0)), kScaleMin);
    return {mu, scale};
}

ag::Value* CodecModel::gaussian_bits_graph(ag::Value* v, ag::Value* mean, ag::Value* scale) {
    ag::Value* centered = ag::sub(v, mean);
    ag::Value* upper = ag::erf_op(ag::mul_scalar(ag::div(ag::add_scalar(centered, 0.5), scale), kInvSqrt2));
    ag::Value* lower = ag::erf_op(ag::mul_scalar(ag::div(ag::add_scalar(centered, -0.5), scale), kInvSqrt2));
    ag::Value* mass = ag::clamp_min(ag::mul_scalar(ag::sub(upper, lower), 0.5), kTrainLikelihoodFloor);
    return ag::mul_scalar(ag::sum_all(ag::log_op(mass)), -1.0 / kLog2);
}

CompressedLatent CodecModel::encode_latent(const Tensor& image, int rate_level) const {
    if (image.ndim() != 3 || image.dim(0) != dims_.image_channels)
        throw InvalidArgument("encode_latent: expected [3,H,W] image");
    if (image.dim(1) % 16 != 0 || image.dim(2) % 16 != 0)
        throw InvalidArgument("encode_latent: spatial dims must be multiples of 16, got " +
                              image.shape_str());
    if (rate_level < 0 || rate_level >= dims_.rate_levels)
        throw InvalidArgument("encode_latent: bad rate level " + std::to_string(rate_level));

    ag::Graph g;
    nn::Binding bind(g);
    ag::Value* x = g.leaf(image);
    ag::Value* y = encode_graph(bind, x);
    ag::Value* ys = ag::mul(y, gain_graph(bind, rate_level));
    ag::Value* z = hyper_encode_graph(bind, ys);

    CompressedLatent lat;
    lat.rate_level = rate_level;
    lat.y_c = ys->val.dim(0);
    lat.y_h = ys->val.dim(1);
    lat.y_w = ys->val.dim(2);
    lat.z_c = z->val.dim(0);
    lat.z_h = z->val.dim(1);
    lat.z_w = z->val.dim(2);
    lat.y_q = quantize_symbols(ys->val, "encode_latent(main)");
    lat.z_q = quantize_symbols(z->val, "encode_latent(hyper)");
    return lat;
}

Tensor CodecModel::dequantize(const CompressedLatent& lat) const {
    ag::Graph g;
    nn::Binding bind(g);
    ag::Value* inv = inverse_gain_graph(bind, lat.rate_level);
    Tensor y_hat({lat.y_c, lat.y_h, lat.y_w});
    const std::int64_t hw = static_cast<std::int64_t>(lat.y_h) * lat.y_w;
    for (int c = 0; c < lat.y_c; ++c) {
        const double ig = inv->val[c];
        for (std::int64_t i = 0; i < hw; ++i)
            y_hat[c * hw + i] = static_cast<double>(lat.y_q[static_cast<std::size_t>(c * hw + i)]) * ig;
    }
    return y_hat;
}

Tensor CodecModel::aux_decode(const CompressedLatent& lat) const {
    ag::Graph g;
    nn::Binding bind(g);
    ag::Value* out = aux_decode_graph(bind, g.leaf(dequantize(lat)));
    Tensor img = out->val.clone();
    double* p = img.data();
    for (std::int64_t i = 0; i < img.numel(); ++i) p[i] = std::min(1.0, std::max(0.0, p[i]));
    return img;
}

std::vector<CdfTable> CodecModel::y_tables(const CompressedLatent& lat) const {
    ag::Graph g;
    nn::Binding bind(g);
    Tensor z_hat({lat.z_c, lat.z_h, lat.z_w});
    for (std::int64_t i = 0; i < z_hat.numel(); ++i)
        z_hat[i] = static_cast<double>(lat.z_q[static_cast<std::size_t>(i)]);
    auto [mean, scale] = hyper_decode_graph(bind, g.leaf(z_hat));
    if (mean->val.dim(1) != lat.y_h || mean->val.dim(2) != lat.y_w)
        throw InvalidArgument("y_tables: hyper field does not match latent dims");

    const std::int64_t n = lat.y_count();
    std::vector<CdfTable> tables;
    tables.reserve(static_cast<std::size_t>(n));
    const double* mp = mean->val.data();
    const double* sp = scale->val.data();
    for (std::int64_t i = 0; i < n; ++i)
        tables.push_back(build_cdf(mp[i], sp[i], kSymbolLo, kSymbolHi));
    return tables;
}

std::vector<CdfTable> CodecModel::z_tables(int z_c, int z_h, int z_w) const {
    ag::Graph g;
    nn::Binding bind(g);
    auto [mu, scale] = z_prior_graph(bind);
    std::vector<CdfTable> tables;
    tables.reserve(static_cast<std::size_t>(z_c) * z_h * z_w);
    for (int c = 0; c < z_c; ++c) {
        const CdfTable t = build_cdf(mu->val[c], scale->val[c], kSymbolLo, kSymbolHi);
        for (int i = 0; i < z_h * z_w; ++i) tables.push_back(t);
    }
    return tables;
}

double CodecModel::estimate_rate(const CompressedLatent& lat) const {
    // The quantized tables are the entropy model's operational coding
    // distribution, so the estimate sums their exact per-symbol costs; the
    // only gap left against the coded stream is the coder's flush overhead.
    return quantized_bits(lat.y_q, y_tables(lat)) +
           quantized_bits(lat.z_q, z_tables(lat.z_c, lat.z_h, lat.z_w));
}

CodecModel::PretextParts CodecModel::pretext_loss(nn::Binding& bind, const Tensor& image,
                                                  int rate_level, std::uint64_t noise_seed,
                                                  QuantMode mode) const {
    ag::Graph& g = bind.graph();
    ag::Value* x = g.leaf(image);
    ag::Value* y = encode_graph(bind, x);
    ag::Value* ys = ag::mul(y, gain_graph(bind, rate_level));

    // Rate side: additive-uniform relaxation of the quantizer.
    ag::Value* y_noisy = ag::add(ys, g.leaf(uniform_noise(ys->val.shape(), noise_seed, 1)));
    ag::Value* z = hyper_encode_graph(bind, ys);
    ag::Value* z_noisy = ag::add(z, g.leaf(uniform_noise(z->val.shape(), noise_seed, 2)));
    auto [mean, scale] = hyper_decode_graph(bind, z_noisy);
    // Ceil-division downsampling can overshoot on small training crops; the
    // decoded field is cropped back onto the latent grid.
    mean = ag::crop_hw(mean, ys->val.dim(1), ys->val.dim(2));
    scale = ag::crop_hw(scale, ys->val.dim(1), ys->val.dim(2));
    ag::Value* y_bits = gaussian_bits_graph(y_noisy, mean, scale);
    auto [zmu, zscale] = z_prior_graph(bind);
    ag::Value* z_bits = gaussian_bits_graph(z_noisy, zmu, zscale);
    const double pixels = static_cast<double>(image.dim(1)) * image.dim(2);
    ag::Value* bpp = ag::mul_scalar(ag::add(y_bits, z_bits), 1.0 / pixels);

    // Distortion side: straight-through rounding (or the shared noise
    // relaxation), then the real dequantized path.
    ag::Value* y_repr = mode == QuantMode::SteRound ? ag::round_ste(ys) : y_noisy;
    ag::Value* y_hat = ag::mul(y_repr, inverse_gain_graph(bind, rate_level));
    ag::Value* recon = aux_decode_graph(bind, y_hat);
    const int min_dim = std::min(image.dim(1), image.dim(2));
    int scales = 3, window = 11;
    if (min_dim < 64) {
        // Small training crops: shrink to whatever fits (single scale, odd
        // window no larger than the crop).
        scales = 1;
        window = std::min(11, min_dim % 2 == 1 ? min_dim : min_dim - 1);
    }
    ag::Value* ms = ag_ms::ms_ssim_op(x, recon, scales, window);
    ag::Value* dist = ag::sub(g.leaf(Tensor::scalar(1.0)), ms);

    PretextParts parts;
    parts.loss = ag::add(bpp, ag::mul_scalar(dist, lambdas_.lambdas[static_cast<std::size_t>(rate_level)]));
    parts.bpp = bpp->val[0];
    parts.distortion = dist->val[0];
    return parts;
}

} // namespace gencodec
