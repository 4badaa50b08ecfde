#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gencodec/adapter.hpp"
#include "gencodec/codec.hpp"
#include "gencodec/corpus.hpp"
#include "gencodec/diffusion.hpp"

namespace gencodec {

// One config drives all three stages; zeros fall back to the stage defaults
// listed in docs/config.md.
struct TrainConfig {
    std::string stage = "prior"; // prior | pretext | adapter
    std::uint64_t seed = 42;

    // corpus
    int corpus_size = 5000;
    int test_count = 32;
    int image = 64;
    CorpusStyle corpus_style = CorpusStyle::Shapes;
    std::string image_dir;

    // optimization (0 = stage default)
    int epochs = 0;
    int batch_size = 0;
    double lr = 0.0;
    int steps_per_epoch = 0;
    std::string rate_schedule = "uniform";

    // io
    std::string ckpt_dir = "models";
    std::string metrics_path; // default: <ckpt_dir>/metrics.jsonl
    int threads = 0;

    int resolved_epochs() const;
    int resolved_batch() const;
    double resolved_lr() const;
};

struct StageResult {
    std::vector<double> epoch_loss;
    double final_loss = 0.0;
};

// Stage 0: autoencoder reconstruction, latent statistics, then unconditional
// noise-prediction training. Writes <ckpt_dir>/prior.gckp (or `out_name`).
StageResult train_prior(const TrainConfig& cfg, PriorModel& prior,
                        const std::string& out_name = "prior.gckp");

// Stage 1: rate-distortion pretext optimization of encoder, hyperprior,
// gains and the auxiliary decoder. Writes codec.gckp and codec_aux.gckp.
StageResult train_pretext(const TrainConfig& cfg, CodecModel& codec);

// Stage 2: adapter + fusion fine-tuning against a frozen codec and prior.
// Writes adapter.gckp (or `out_name`) with the prior checksum it was tuned
// against recorded in the checkpoint metadata.
StageResult train_adapter(const TrainConfig& cfg, CodecModel& codec, PriorModel& prior,
                          AdapterModel& adapter, const std::string& prior_ckpt_path,
                          const std::string& out_name = "adapter.gckp");

// Prior-swap workflow: fine-tunes only adapter + fusion against a different
// frozen prior; the codec checkpoint is never touched.
StageResult swap_prior(const TrainConfig& cfg, CodecModel& codec, PriorModel& new_prior,
                       AdapterModel& adapter, const std::string& new_prior_ckpt_path,
                       const std::string& out_name = "adapter_swap.gckp");

} // namespace gencodec
