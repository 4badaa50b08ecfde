#include "gencodec/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "gencodec/checkpoint.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/msssim.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

int default_epochs(const std::string& stage) {
    if (stage == "prior") return 6;
    if (stage == "pretext") return 30;
    return 10; // adapter
}

void scale_grads(nn::ParamStore& ps, double factor) {
    for (const auto& p : ps.all()) {
        if (!p->grad.defined()) continue;
        double* g = p->grad.data();
        for (std::int64_t i = 0; i < p->grad.numel(); ++i) g[i] *= factor;
    }
}

// Builds one graph per sample in parallel, accumulates leaf gradients in
// sample order, averages them over the batch, then steps the optimizer.
// Returns the mean loss.
double run_batch(std::vector<nn::ParamStore*> stores, nn::Adam& opt, int batch, int threads,
                 const std::function<ag::Value*(int, nn::Binding&)>& build) {
    std::vector<std::unique_ptr<ag::Graph>> graphs(static_cast<std::size_t>(batch));
    std::vector<std::optional<nn::Binding>> binds(static_cast<std::size_t>(batch));
    std::vector<double> losses(static_cast<std::size_t>(batch), 0.0);

    nn::parallel_for(
        batch,
        [&](std::int64_t k) {
            graphs[static_cast<std::size_t>(k)] = std::make_unique<ag::Graph>();
            binds[static_cast<std::size_t>(k)].emplace(*graphs[static_cast<std::size_t>(k)]);
            ag::Value* loss = build(static_cast<int>(k), *binds[static_cast<std::size_t>(k)]);
            losses[static_cast<std::size_t>(k)] = loss->val[0];
            graphs[static_cast<std::size_t>(k)]->backward(loss);
        },
        threads);

    for (int k = 0; k < batch; ++k) binds[static_cast<std::size_t>(k)]->accumulate_grads();
    double mean = 0.0;
    for (double l : losses) mean += l;
    mean /= batch;

    for (nn::ParamStore* ps : stores) scale_grads(*ps, 1.0 / batch);
    for (nn::ParamStore* ps : stores) opt.step(*ps);
    for (nn::ParamStore* ps : stores) ps->zero_grad();
    return mean;
}

class MetricsLog {
public:
    MetricsLog(const TrainConfig& cfg) {
        fs::create_directories(cfg.ckpt_dir);
        const std::string path =
            cfg.metrics_path.empty() ? (fs::path(cfg.ckpt_dir) / "metrics.jsonl").string() : cfg.metrics_path;
        out_.open(path, std::ios::app);
    }

    void write(const json& row) {
        if (out_) out_ << row.dump() << "\n" << std::flush;
    }

private:
    std::ofstream out_;
};

void abort_on_nan(double loss, const std::string& stage, const std::string& last_good) {
    if (std::isfinite(loss)) return;
    throw std::runtime_error(stage + ": loss became non-finite; last-good checkpoint: " + last_good);
}

} // namespace

int TrainConfig::resolved_epochs() const { return epochs > 0 ? epochs : default_epochs(stage); }
int TrainConfig::resolved_batch() const { return batch_size > 0 ? batch_size : 8; }
double TrainConfig::resolved_lr() const { return lr > 0.0 ? lr : 1e-4; }

StageResult train_prior(const TrainConfig& cfg, PriorModel& prior, const std::string& out_name) {
    ToyCorpus corpus({cfg.seed, cfg.corpus_size, cfg.test_count, cfg.image, cfg.corpus_style, cfg.image_dir});
    MetricsLog log(cfg);
    const std::string ckpt = (fs::path(cfg.ckpt_dir) / out_name).string();
    const int batch = cfg.resolved_batch();
    const int steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : corpus.train_count() / batch;
    const int epochs = cfg.resolved_epochs();
    CounterRng rng(cfg.seed, 0x57A6E0);
    StageResult result;

    // ---- phase A: autoencoder reconstruction
    nn::Adam vae_opt(cfg.resolved_lr());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < steps; ++step) {
            std::vector<Tensor> images(static_cast<std::size_t>(batch));
            for (int k = 0; k < batch; ++k)
                images[static_cast<std::size_t>(k)] =
                    corpus.train_image(static_cast<int>(rng.uniform_int(0, corpus.train_count() - 1)));

            const double loss = run_batch(
                {&prior.params()}, vae_opt, batch, cfg.threads, [&](int k, nn::Binding& bind) {
                    ag::Graph& g = bind.graph();
                    ag::Value* x = g.leaf(images[static_cast<std::size_t>(k)]);
                    ag::Value* z = prior.vae_encode_graph(bind, x);
                    ag::Value* recon = prior.vae_decode_graph(bind, z);
                    ag::Value* mse = ag::mean_all(ag::square(ag::sub(recon, x)));
                    ag::Value* ms = ag_ms::ms_ssim_op(x, recon, 3, 11);
                    return ag::add(ag::mul_scalar(mse, 5.0),
                                   ag::mul_scalar(ag::sub(g.leaf(Tensor::scalar(1.0)), ms), 0.5));
                });
            abort_on_nan(loss, "prior/vae", ckpt);
            epoch_loss += loss;
        }
        epoch_loss /= steps;
        log.write({{"stage", "prior.vae"}, {"epoch", epoch}, {"loss", epoch_loss}});
        result.epoch_loss.push_back(epoch_loss);
    }

    // ---- phase B: latent statistics over the training corpus
    {
        const int zc = prior.dims().z_channels;
        Tensor mu({zc});
        Tensor sigma({zc});
        std::vector<double> sum(static_cast<std::size_t>(zc), 0.0), sq(static_cast<std::size_t>(zc), 0.0);
        std::int64_t count = 0;
        const int probe = std::min(corpus.train_count(), 128);
        for (int i = 0; i < probe; ++i) {
            ag::Graph g;
            nn::Binding bind(g);
            const Tensor z = prior.vae_encode_graph(bind, g.leaf(corpus.train_image(i)))->val;
            const std::int64_t hw = z.numel() / zc;
            for (int c = 0; c < zc; ++c)
                for (std::int64_t j = 0; j < hw; ++j) {
                    sum[static_cast<std::size_t>(c)] += z[c * hw + j];
                    sq[static_cast<std::size_t>(c)] += z[c * hw + j] * z[c * hw + j];
                }
            count += z.numel() / zc;
        }
        for (int c = 0; c < zc; ++c) {
            mu[c] = sum[static_cast<std::size_t>(c)] / static_cast<double>(count);
            const double var = sq[static_cast<std::size_t>(c)] / static_cast<double>(count) - mu[c] * mu[c];
            sigma[c] = std::sqrt(std::max(var, 1e-6));
        }
        prior.set_latent_stats(mu, sigma);
    }

    // VAE weights stay fixed while the noise predictor trains.
    for (const auto& p : prior.params().all())
        if (p->name.rfind("vae.", 0) == 0) p->trainable = false;

    // ---- phase C: unconditional epsilon prediction on cached latents
    std::vector<Tensor> latents(static_cast<std::size_t>(corpus.train_count()));
    nn::parallel_for(
        corpus.train_count(),
        [&](std::int64_t i) {
            latents[static_cast<std::size_t>(i)] = prior.latent_autoencode(corpus.train_image(static_cast<int>(i))).first;
        },
        cfg.threads);

    nn::Adam eps_opt(cfg.resolved_lr());
    const int T = prior.schedule().T;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < steps; ++step) {
            struct Draw {
                int idx, t;
                Tensor z_t, eps;
            };
            std::vector<Draw> draws(static_cast<std::size_t>(batch));
            for (int k = 0; k < batch; ++k) {
                Draw& d = draws[static_cast<std::size_t>(k)];
                d.idx = static_cast<int>(rng.uniform_int(0, corpus.train_count() - 1));
                d.t = static_cast<int>(rng.uniform_int(1, T));
                d.eps = seeded_gaussian(latents[0].shape(), rng.next_u64(), 0xE5);
                d.z_t = forward_noise(latents[static_cast<std::size_t>(d.idx)], d.t, d.eps, prior.schedule());
            }
            const double loss = run_batch(
                {&prior.params()}, eps_opt, batch, cfg.threads, [&](int k, nn::Binding& bind) {
                    const Draw& d = draws[static_cast<std::size_t>(k)];
                    ag::Graph& g = bind.graph();
                    ag::Value* pred = prior.unet_eps_graph(bind, g.leaf(d.z_t), d.t, nullptr);
                    return ag::mean_all(ag::square(ag::sub(pred, g.leaf(d.eps))));
                });
            abort_on_nan(loss, "prior/eps", ckpt);
            epoch_loss += loss;
        }
        epoch_loss /= steps;
        log.write({{"stage", "prior.eps"}, {"epoch", epoch}, {"loss", epoch_loss}});
        result.epoch_loss.push_back(epoch_loss);
        result.final_loss = epoch_loss;
        save_checkpoint(ckpt, prior.params(), {{"kind", "prior"}, {"seed", std::to_string(cfg.seed)}});
    }
    return result;
}

StageResult train_pretext(const TrainConfig& cfg, CodecModel& codec) {
    ToyCorpus corpus({cfg.seed, cfg.corpus_size, cfg.test_count, cfg.image, cfg.corpus_style, cfg.image_dir});
    MetricsLog log(cfg);
    fs::create_directories(cfg.ckpt_dir);
    const std::string ckpt = (fs::path(cfg.ckpt_dir) / CheckpointNames::codec).string();
    const std::string aux_ckpt = (fs::path(cfg.ckpt_dir) / CheckpointNames::codec_aux).string();
    const int batch = cfg.resolved_batch();
    const int steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : corpus.train_count() / batch;
    const int epochs = cfg.resolved_epochs();
    const int levels = codec.dims().rate_levels;
    CounterRng rng(cfg.seed, 0x57A6E1);
    nn::Adam opt(cfg.resolved_lr());
    StageResult result;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < steps; ++step) {
            // One uniformly drawn rate level per optimization step; the full
            // per-level sum is recovered in expectation.
            const int level = cfg.rate_schedule == "cycle"
                                  ? (epoch * steps + step) % levels
                                  : static_cast<int>(rng.uniform_int(0, levels - 1));
            std::vector<Tensor> images(static_cast<std::size_t>(batch));
            std::vector<std::uint64_t> noise_seeds(static_cast<std::size_t>(batch));
            for (int k = 0; k < batch; ++k) {
                images[static_cast<std::size_t>(k)] =
                    corpus.train_image(static_cast<int>(rng.uniform_int(0, corpus.train_count() - 1)));
                noise_seeds[static_cast<std::size_t>(k)] = rng.next_u64();
            }
            const double loss =
                run_batch({&codec.params(), &codec.aux_params()}, opt, batch, cfg.threads,
                          [&](int k, nn::Binding& bind) {
                              return codec
                                  .pretext_loss(bind, images[static_cast<std::size_t>(k)], level,
                                                noise_seeds[static_cast<std::size_t>(k)])
                                  .loss;
                          });
            abort_on_nan(loss, "pretext", ckpt);
            epoch_loss += loss;
        }
        epoch_loss /= steps;

        // Per-level probe on a fixed slice of the training set. Skipped for
        // crop sizes the coded path cannot represent.
        json level_rows = json::array();
        const int probe = cfg.image % 16 == 0 ? std::min(4, corpus.train_count()) : 0;
        for (int level = 0; probe > 0 && level < levels; ++level) {
            double bpp = 0.0, ms = 0.0;
            for (int i = 0; i < probe; ++i) {
                const Tensor img = corpus.train_image(i);
                const CompressedLatent lat = codec.encode_latent(img, level);
                bpp += codec.estimate_rate(lat) / (static_cast<double>(img.dim(1)) * img.dim(2));
                ms += ms_ssim(img, codec.aux_decode(lat), 3);
            }
            level_rows.push_back({{"level", level}, {"bpp", bpp / probe}, {"msssim", ms / probe}});
        }
        log.write({{"stage", "pretext"}, {"epoch", epoch}, {"loss", epoch_loss}, {"levels", level_rows}});
        result.epoch_loss.push_back(epoch_loss);
        result.final_loss = epoch_loss;
        save_checkpoint(ckpt, codec.params(), {{"kind", "codec"}, {"seed", std::to_string(cfg.seed)}});
        save_checkpoint(aux_ckpt, codec.aux_params(), {{"kind", "codec_aux"}});
    }
    return result;
}

namespace {

StageResult adapter_stage(const TrainConfig& cfg, CodecModel& codec, PriorModel& prior,
                          AdapterModel& adapter, const std::string& prior_ckpt_path,
                          const std::string& out_name, const char* stage_tag) {
    ToyCorpus corpus({cfg.seed, cfg.corpus_size, cfg.test_count, cfg.image, cfg.corpus_style, cfg.image_dir});
    MetricsLog log(cfg);
    fs::create_directories(cfg.ckpt_dir);
    const std::string ckpt = (fs::path(cfg.ckpt_dir) / out_name).string();
    const int batch = cfg.resolved_batch();
    const int steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : corpus.train_count() / batch;
    const int epochs = cfg.resolved_epochs();
    const int levels = codec.dims().rate_levels;
    const int T = prior.schedule().T;
    CounterRng rng(cfg.seed, 0x57A6E2);

    // Everything but the adapter stays fixed in this stage.
    codec.params().freeze();
    codec.aux_params().freeze();
    prior.params().freeze();

    // The codec and autoencoder sides of each training image never change,
    // so cache the clean latents once.
    std::vector<Tensor> z0(static_cast<std::size_t>(corpus.train_count()));
    std::vector<Tensor> y_raw(static_cast<std::size_t>(corpus.train_count()));
    nn::parallel_for(
        corpus.train_count(),
        [&](std::int64_t i) {
            const Tensor img = corpus.train_image(static_cast<int>(i));
            z0[static_cast<std::size_t>(i)] = prior.latent_autoencode(img).first;
            ag::Graph g;
            nn::Binding bind(g);
            y_raw[static_cast<std::size_t>(i)] = codec.encode_graph(bind, g.leaf(img))->val.clone();
        },
        cfg.threads);

    // Frozen per-level gains as plain vectors.
    std::vector<std::vector<double>> gain(static_cast<std::size_t>(levels)),
        inv_gain(static_cast<std::size_t>(levels));
    for (int s = 0; s < levels; ++s) {
        ag::Graph g;
        nn::Binding bind(g);
        const Tensor gs = codec.gain_graph(bind, s)->val;
        const Tensor igs = codec.inverse_gain_graph(bind, s)->val;
        for (std::int64_t c = 0; c < gs.numel(); ++c) {
            gain[static_cast<std::size_t>(s)].push_back(gs[c]);
            inv_gain[static_cast<std::size_t>(s)].push_back(igs[c]);
        }
    }
    auto transmitted_latent = [&](int idx, int level) {
        const Tensor& y = y_raw[static_cast<std::size_t>(idx)];
        Tensor y_hat(y.shape());
        const std::int64_t hw = static_cast<std::int64_t>(y.dim(1)) * y.dim(2);
        for (int c = 0; c < y.dim(0); ++c) {
            const double gs = gain[static_cast<std::size_t>(level)][static_cast<std::size_t>(c)];
            const double igs = inv_gain[static_cast<std::size_t>(level)][static_cast<std::size_t>(c)];
            for (std::int64_t i = 0; i < hw; ++i)
                y_hat[c * hw + i] = std::round(y[c * hw + i] * gs) * igs;
        }
        return y_hat;
    };

    nn::Adam opt(cfg.resolved_lr());
    StageResult result;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < steps; ++step) {
            struct Draw {
                int t = 0;
                Tensor y_hat, z_t, eps;
            };
            std::vector<Draw> draws(static_cast<std::size_t>(batch));
            for (int k = 0; k < batch; ++k) {
                Draw& d = draws[static_cast<std::size_t>(k)];
                const int idx = static_cast<int>(rng.uniform_int(0, corpus.train_count() - 1));
                const int level = static_cast<int>(rng.uniform_int(0, levels - 1));
                d.t = static_cast<int>(rng.uniform_int(1, T));
                d.y_hat = transmitted_latent(idx, level);
                d.eps = seeded_gaussian(z0[0].shape(), rng.next_u64(), 0xE6);
                d.z_t = forward_noise(z0[static_cast<std::size_t>(idx)], d.t, d.eps, prior.schedule());
            }
            const double loss = run_batch(
                {&adapter.params()}, opt, batch, cfg.threads, [&](int k, nn::Binding& bind) {
                    const Draw& d = draws[static_cast<std::size_t>(k)];
                    ag::Graph& g = bind.graph();
                    std::vector<ag::Value*> feats = adapter.adapt_graph(bind, g.leaf(d.y_hat));
                    const UNetControl ctl = adapter.make_control_graph(feats);
                    ag::Value* pred = prior.unet_eps_graph(bind, g.leaf(d.z_t), d.t, &ctl);
                    return ag::mean_all(ag::square(ag::sub(pred, g.leaf(d.eps))));
                });
            abort_on_nan(loss, stage_tag, ckpt);
            epoch_loss += loss;
        }
        epoch_loss /= steps;
        log.write({{"stage", stage_tag}, {"epoch", epoch}, {"loss", epoch_loss}});
        result.epoch_loss.push_back(epoch_loss);
        result.final_loss = epoch_loss;
        save_checkpoint(ckpt, adapter.params(),
                        {{"kind", "adapter"},
                         {"prior_checksum", to_hex(fnv1a_file(prior_ckpt_path))},
                         {"seed", std::to_string(cfg.seed)}});
    }
    return result;
}

} // namespace

StageResult train_adapter(const TrainConfig& cfg, CodecModel& codec, PriorModel& prior,
                          AdapterModel& adapter, const std::string& prior_ckpt_path,
                          const std::string& out_name) {
    return adapter_stage(cfg, codec, prior, adapter, prior_ckpt_path, out_name, "adapter");
}

StageResult swap_prior(const TrainConfig& cfg, CodecModel& codec, PriorModel& new_prior,
                       AdapterModel& adapter, const std::string& new_prior_ckpt_path,
                       const std::string& out_name) {
    return adapter_stage(cfg, codec, new_prior, adapter, new_prior_ckpt_path, out_name, "adapter.swap");
}

} // namespace gencodec
