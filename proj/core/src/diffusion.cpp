#include "gencodec/diffusion.hpp"

#include <cmath>

#include "gencodec/errors.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end) {
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(static_cast<std::size_t>(T));
    s.alphas_cumprod.resize(static_cast<std::size_t>(T));
    double acc = 1.0;
    for (int i = 0; i < T; ++i) {
        const double beta = beta_start + (beta_end - beta_start) * static_cast<double>(i) / (T - 1);
        s.betas[static_cast<std::size_t>(i)] = beta;
        acc *= 1.0 - beta;
        s.alphas_cumprod[static_cast<std::size_t>(i)] = acc;
    }
    return s;
}

Tensor forward_noise(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T)
        throw InvalidArgument("forward_noise: t=" + std::to_string(t) + " outside [1," +
                              std::to_string(sched.T) + "]");
    if (!z0.same_shape(eps)) throw InvalidArgument("forward_noise: eps shape mismatch");
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Tensor out(z0.shape());
    const double* zp = z0.data();
    const double* ep = eps.data();
    double* op = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) op[i] = a * zp[i] + b * ep[i];
    return out;
}

Tensor seeded_gaussian(std::vector<int> shape, std::uint64_t seed, std::uint64_t stream) {
    CounterRng rng(seed, stream);
    Tensor t(std::move(shape));
    double* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i) p[i] = rng.normal();
    return t;
}

PriorModel::PriorModel(PriorDims dims, std::uint64_t init_seed) : dims_(dims), sched_(NoiseSchedule::linear()) {
    CounterRng rng(init_seed, 0xD1FF);
    const int vw = dims_.vae_width;
    const int zc = dims_.z_channels;

    ve1_ = nn::Conv2d(params_, "vae.enc.c1", 3, vw, 3, 2, 1, rng);
    ve2_ = nn::ResBlock(params_, "vae.enc.r1", vw, vw, rng);
    ve3_ = nn::Conv2d(params_, "vae.enc.c2", vw, 2 * vw, 3, 2, 1, rng);
    ve4_ = nn::ResBlock(params_, "vae.enc.r2", 2 * vw, 2 * vw, rng);
    ve5_ = nn::Conv2d(params_, "vae.enc.c3", 2 * vw, 2 * vw, 3, 2, 1, rng);
    ve6_ = nn::ResBlock(params_, "vae.enc.r3", 2 * vw, 2 * vw, rng);
    ve7_ = nn::Conv2d(params_, "vae.enc.out", 2 * vw, zc, 3, 1, 1, rng, 0.5);

    vd1_ = nn::Conv2d(params_, "vae.dec.in", zc, 2 * vw, 3, 1, 1, rng);
    vd2_ = nn::ResBlock(params_, "vae.dec.r1", 2 * vw, 2 * vw, rng);
    vd3_ = nn::ConvT2d(params_, "vae.dec.u1", 2 * vw, 2 * vw, 4, 2, 1, rng);
    vd4_ = nn::ResBlock(params_, "vae.dec.r2", 2 * vw, 2 * vw, rng);
    vd5_ = nn::ConvT2d(params_, "vae.dec.u2", 2 * vw, vw, 4, 2, 1, rng);
    vd6_ = nn::ResBlock(params_, "vae.dec.r3", vw, vw, rng);
    vd7_ = nn::ConvT2d(params_, "vae.dec.u3", vw, vw, 4, 2, 1, rng);
    vd8_ = nn::Conv2d(params_, "vae.dec.out", vw, 3, 3, 1, 1, rng, 0.5);

    latent_mu_ = params_.add("vae.latent_mu", Tensor::zeros({zc}), /*trainable=*/false);
    latent_sigma_ = params_.add("vae.latent_sigma", Tensor::full({zc}, 1.0), /*trainable=*/false);

    const std::int64_t before_unet = params_.count();
    const int w0 = dims_.unet_widths[0];
    const int w1 = dims_.unet_widths[1];
    const int w2 = dims_.unet_widths[2];
    const int te = dims_.temb_dim;
    const int s = dims_.image / 8; // latent side

    t1_ = nn::Linear(params_, "unet.temb.l1", te / 2, te, rng);
    t2_ = nn::Linear(params_, "unet.temb.l2", te, te, rng);
    conv_in_ = nn::Conv2d(params_, "unet.in", zc, w0, 3, 1, 1, rng);
    down0_ = nn::ResBlock(params_, "unet.down0", w0, w0, rng, te);
    dconv0_ = nn::Conv2d(params_, "unet.dconv0", w0, w1, 3, 2, 1, rng);
    down1_ = nn::ResBlock(params_, "unet.down1", w1, w1, rng, te);
    dconv1_ = nn::Conv2d(params_, "unet.dconv1", w1, w2, 3, 2, 1, rng);
    down2_ = nn::ResBlock(params_, "unet.down2", w2, w2, rng, te);
    mid_ = nn::ResBlock(params_, "unet.mid", w2, w2, rng, te);
    up0_ = nn::ResBlock(params_, "unet.up0", 2 * w2, w2, rng, te);
    uconv0_ = nn::ConvT2d(params_, "unet.uconv0", w2, w1, 4, 2, 1, rng);
    up1_ = nn::ResBlock(params_, "unet.up1", 2 * w1, w1, rng, te);
    uconv1_ = nn::ConvT2d(params_, "unet.uconv1", w1, w0, 4, 2, 1, rng);
    up2_ = nn::ResBlock(params_, "unet.up2", 2 * w0, w0, rng, te);
    // Small (not zero) output init: keeps the early denoising loss tame while
    // leaving a gradient path for everything upstream.
    conv_out_ = nn::Conv2d(params_, "unet.out", w0, zc, 3, 1, 1, rng, 0.05);
    unet_count_ = params_.count() - before_unet;

    taps_ = {
        {w0, s, s},         // after down block 0
        {w1, s / 2, s / 2}, // after down block 1
        {w2, s / 4, s / 4}, // after down block 2
        {w2, s / 4, s / 4}, // after up block 0
        {w1, s / 2, s / 2}, // after up block 1
        {w0, s, s},         // after up block 2
    };
}

ag::Value* PriorModel::vae_encode_graph(nn::Binding& bind, ag::Value* image) const {
    ag::Value* h = ag::silu(ve1_(bind, image));
    h = ve2_(bind, h);
    h = ag::silu(ve3_(bind, h));
    h = ve4_(bind, h);
    h = ag::silu(ve5_(bind, h));
    h = ve6_(bind, h);
    return ve7_(bind, h);
}

ag::Value* PriorModel::vae_decode_graph(nn::Binding& bind, ag::Value* z) const {
    ag::Value* h = ag::silu(vd1_(bind, z));
    h = vd2_(bind, h);
    h = ag::silu(vd3_(bind, h));
    h = vd4_(bind, h);
    h = ag::silu(vd5_(bind, h));
    h = vd6_(bind, h);
    h = ag::silu(vd7_(bind, h));
    return ag::sigmoid(vd8_(bind, h));
}

Tensor PriorModel::normalize_latent(const Tensor& z_raw) const {
    Tensor out = z_raw.clone();
    const int zc = dims_.z_channels;
    const std::int64_t hw = out.numel() / zc;
    for (int c = 0; c < zc; ++c)
        for (std::int64_t i = 0; i < hw; ++i)
            out[c * hw + i] = (out[c * hw + i] - latent_mu_->value[c]) / latent_sigma_->value[c];
    return out;
}

Tensor PriorModel::denormalize_latent(const Tensor& z0) const {
    Tensor out = z0.clone();
    const int zc = dims_.z_channels;
    const std::int64_t hw = out.numel() / zc;
    for (int c = 0; c < zc; ++c)
        for (std::int64_t i = 0; i < hw; ++i)
            out[c * hw + i] = out[c * hw + i] * latent_sigma_->value[c] + latent_mu_->value[c];
    return out;
}

void PriorModel::set_latent_stats(const Tensor& mu, const Tensor& sigma) {
    latent_mu_->value = mu.clone();
    latent_sigma_->value = sigma.clone();
}

std::pair<Tensor, Tensor> PriorModel::latent_autoencode(const Tensor& image) const {
    ag::Graph g;
    nn::Binding bind(g);
    ag::Value* z_raw = vae_encode_graph(bind, g.leaf(image));
    ag::Value* recon = vae_decode_graph(bind, z_raw);
    return {normalize_latent(z_raw->val), recon->val.clone()};
}

ag::Value* PriorModel::time_embedding(nn::Binding& bind, int t) const {
    const int half = dims_.temb_dim / 4;
    Tensor emb({1, 2 * half});
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / (half - 1));
        emb[i] = std::sin(t * freq);
        emb[half + i] = std::cos(t * freq);
    }
    ag::Value* e = bind.graph().leaf(emb);
    return t2_(bind, ag::silu(t1_(bind, e)));
}

ag::Value* PriorModel::unet_eps_graph(nn::Binding& bind, ag::Value* z_t, int t,
                                      const UNetControl* control) const {
    if (t < 1 || t > sched_.T)
        throw InvalidArgument("unet_eps: t outside schedule");
    auto tap = [&](int site, ag::Value* c) -> ag::Value* {
        if (!control || !control->inject) return c;
        return control->inject(bind, site, c);
    };

    ag::Value* temb = time_embedding(bind, t);
    ag::Value* h = conv_in_(bind, z_t);
    ag::Value* s0 = tap(0, down0_(bind, h, temb));
    ag::Value* s1 = tap(1, down1_(bind, dconv0_(bind, s0), temb));
    ag::Value* s2 = tap(2, down2_(bind, dconv1_(bind, s1), temb));
    ag::Value* m = mid_(bind, s2, temb);
    ag::Value* u0 = tap(3, up0_(bind, ag::concat_ch(m, s2), temb));
    ag::Value* u1 = tap(4, up1_(bind, ag::concat_ch(uconv0_(bind, u0), s1), temb));
    ag::Value* u2 = tap(5, up2_(bind, ag::concat_ch(uconv1_(bind, u1), s0), temb));
    return conv_out_(bind, u2);
}

Tensor PriorModel::predict_eps(const Tensor& z_t, int t, const UNetControl* control) const {
    ag::Graph g;
    nn::Binding bind(g);
    return unet_eps_graph(bind, g.leaf(z_t), t, control)->val.clone();
}

Tensor PriorModel::ddim_sample(std::uint64_t seed, int steps, const UNetControl* control) const {
    if (steps < 1) throw InvalidArgument("ddim_sample: steps must be >= 1");
    const int side = dims_.image / 8;
    Tensor z = seeded_gaussian({dims_.z_channels, side, side}, seed, 0xDD1);

    // Uniform timestep grid: grid[j] = (j+1)*T/steps, descending traversal.
    std::vector<int> grid(static_cast<std::size_t>(steps));
    for (int j = 0; j < steps; ++j)
        grid[static_cast<std::size_t>(j)] = static_cast<int>((static_cast<std::int64_t>(j) + 1) * sched_.T / steps);

    for (int j = steps - 1; j >= 0; --j) {
        const int t = grid[static_cast<std::size_t>(j)];
        const int t_prev = j > 0 ? grid[static_cast<std::size_t>(j - 1)] : 0;
        const double ab_t = sched_.alpha_bar(t);
        const double ab_prev = t_prev == 0 ? 1.0 : sched_.alpha_bar(t_prev);

        const Tensor eps = predict_eps(z, t, control);
        const double sa = std::sqrt(ab_t);
        const double sb = std::sqrt(1.0 - ab_t);
        const double pa = std::sqrt(ab_prev);
        const double pb = std::sqrt(1.0 - ab_prev);
        double* zp = z.data();
        const double* ep = eps.data();
        for (std::int64_t i = 0; i < z.numel(); ++i) {
            const double z0_pred = (zp[i] - sb * ep[i]) / sa;
            zp[i] = pa * z0_pred + pb * ep[i];
        }
    }
    return z;
}

} // namespace gencodec
