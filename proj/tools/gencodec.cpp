// Command-line front end: train / encode / decode / eval / bd / plot.
//
// Exit codes: 0 success, 2 usage error, 3 missing model or input file,
// 4 malformed stream or checksum refusal, 5 internal failure.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "gencodec/bd.hpp"
#include "gencodec/checkpoint.hpp"
#include "gencodec/corpus.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/metrics.hpp"
#include "gencodec/msssim.hpp"
#include "gencodec/pipeline.hpp"
#include "gencodec/plot.hpp"
#include "gencodec/rng.hpp"
#include "gencodec/sweep.hpp"
#include "gencodec/train.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gencodec;

constexpr int kExitOk = 0;
constexpr int kExitMissing = 3;
constexpr int kExitStream = 4;
constexpr int kExitInternal = 5;

CorpusStyle parse_style(const std::string& s) {
    if (s == "shapes") return CorpusStyle::Shapes;
    if (s == "patterns") return CorpusStyle::Patterns;
    throw InvalidArgument("unknown corpus style: " + s);
}

FusionMode parse_fusion(const std::string& s) {
    if (s == "attentive") return FusionMode::Attentive;
    if (s == "additive") return FusionMode::Additive;
    if (s == "zero") return FusionMode::ZeroFused;
    if (s == "none") return FusionMode::None;
    throw InvalidArgument("unknown fusion mode: " + s);
}

std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

void write_binary(const std::string& path, const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

struct TrainCli {
    TrainConfig cfg;
    std::string corpus_style = "shapes";
    std::string prior_name = CheckpointNames::prior;
    std::string out_name; // stage-dependent default
};

int run_train(const TrainCli& cli) {
    TrainConfig cfg = cli.cfg;
    cfg.corpus_style = parse_style(cli.corpus_style);

    SystemConfig sys_cfg;
    sys_cfg.init_seed = cfg.seed;

    if (cfg.stage == "prior") {
        PriorModel prior(sys_cfg.prior_dims, cfg.seed);
        train_prior(cfg, prior, cli.out_name.empty() ? CheckpointNames::prior : cli.out_name);
        return kExitOk;
    }
    if (cfg.stage == "pretext") {
        CodecModel codec(sys_cfg.codec_dims, cfg.seed);
        train_pretext(cfg, codec);
        return kExitOk;
    }
    if (cfg.stage == "adapter") {
        const std::string codec_path = (fs::path(cfg.ckpt_dir) / CheckpointNames::codec).string();
        const std::string prior_path = (fs::path(cfg.ckpt_dir) / cli.prior_name).string();
        for (const std::string& p : {codec_path, prior_path})
            if (!fs::exists(p)) {
                std::cerr << "missing checkpoint: " << p << "\n";
                return kExitMissing;
            }
        CodecModel codec(sys_cfg.codec_dims, cfg.seed);
        PriorModel prior(sys_cfg.prior_dims, cfg.seed);
        load_checkpoint(codec_path, codec.params());
        load_checkpoint(prior_path, prior.params());
        AdapterModel adapter(prior.tap_registry(), sys_cfg.codec_dims.latent_channels,
                             sys_cfg.prior_dims.image / 4, cfg.seed);
        train_adapter(cfg, codec, prior, adapter, prior_path,
                      cli.out_name.empty() ? CheckpointNames::adapter : cli.out_name);
        return kExitOk;
    }
    std::cerr << "unknown stage: " << cfg.stage << "\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative image codec with a frozen diffusion prior"};
    app.require_subcommand(1);

    // ---- train
    TrainCli train_cli;
    CLI::App* train = app.add_subcommand("train", "run one training stage");
    train->set_config("--config", "", "read options from an ini file");
    train->add_option("--stage", train_cli.cfg.stage, "prior | pretext | adapter")->required();
    train->add_option("--seed", train_cli.cfg.seed, "global seed");
    train->add_option("--corpus-size", train_cli.cfg.corpus_size, "synthetic corpus size");
    train->add_option("--test-count", train_cli.cfg.test_count, "held-out image count");
    train->add_option("--corpus-style", train_cli.corpus_style, "shapes | patterns");
    train->add_option("--image-dir", train_cli.cfg.image_dir, "ingest .ppm images instead");
    train->add_option("--epochs", train_cli.cfg.epochs, "epochs (0 = stage default)");
    train->add_option("--batch-size", train_cli.cfg.batch_size, "batch size (0 = default 8)");
    train->add_option("--lr", train_cli.cfg.lr, "learning rate (0 = default 1e-4)");
    train->add_option("--steps-per-epoch", train_cli.cfg.steps_per_epoch, "0 = train_count/batch");
    train->add_option("--rate-schedule", train_cli.cfg.rate_schedule, "uniform | cycle");
    train->add_option("--ckpt-dir", train_cli.cfg.ckpt_dir, "checkpoint directory");
    train->add_option("--metrics", train_cli.cfg.metrics_path, "metrics jsonl path");
    train->add_option("--threads", train_cli.cfg.threads, "worker threads (0 = all)");
    train->add_option("--prior-name", train_cli.prior_name, "prior checkpoint file (adapter stage)");
    train->add_option("--out-name", train_cli.out_name, "output checkpoint file name");

    // ---- encode
    std::string in_path, out_path, model_dir = "models";
    int rate_level = 0;
    std::uint64_t seed = 42;
    std::uint64_t image_index = 0;
    CLI::App* encode = app.add_subcommand("encode", "compress a .ppm image into a coded stream");
    encode->add_option("--input", in_path, "input .ppm")->required();
    encode->add_option("--output", out_path, "output stream path")->required();
    encode->add_option("--models", model_dir, "model directory");
    encode->add_option("--rate-level", rate_level, "0 (most bits) .. 9 (fewest)");
    encode->add_option("--seed", seed, "global decode seed recorded in the stream");
    encode->add_option("--image-index", image_index, "per-image noise substream index");

    // ---- decode
    std::string fusion = "attentive";
    int ddim_steps = 10;
    bool no_renorm = false;
    CLI::App* decode = app.add_subcommand("decode", "reconstruct an image from a coded stream");
    decode->add_option("--input", in_path, "input stream path")->required();
    decode->add_option("--output", out_path, "output .ppm")->required();
    decode->add_option("--models", model_dir, "model directory");
    decode->add_option("--steps", ddim_steps, "sampling steps");
    decode->add_option("--fusion", fusion, "attentive | additive | zero | none");
    decode->add_flag("--no-renorm", no_renorm, "skip distribution renormalization");

    // ---- eval
    std::string records_path = "rd_records.jsonl", plot_path, metric = "lpips_proxy", label = "gencodec";
    int corpus_size = 232, test_count = 32;
    bool ablations = false, payload_bpp = false;
    std::uint64_t eval_seed = 42;
    CLI::App* eval = app.add_subcommand("eval", "rate-distortion sweep over the test split");
    eval->add_option("--models", model_dir, "model directory");
    eval->add_option("--records", records_path, "output curve records (jsonl, appended)");
    eval->add_option("--plot", plot_path, "optional SVG plot path");
    eval->add_option("--metric", metric, "lpips_proxy | msssim");
    eval->add_option("--label", label, "curve label");
    eval->add_option("--corpus-size", corpus_size, "synthetic corpus size");
    eval->add_option("--test-count", test_count, "test image count");
    eval->add_option("--seed", eval_seed, "corpus + decode seed");
    eval->add_option("--steps", ddim_steps, "sampling steps");
    eval->add_flag("--ablate", ablations, "also sweep no-adapter / additive-fusion / no-renorm");
    eval->add_flag("--payload-bpp", payload_bpp, "report payload bpp (exclude 36-byte header)");

    // ---- bd
    std::string ref_label, test_label;
    CLI::App* bd = app.add_subcommand("bd", "Bjontegaard deltas between two recorded curves");
    bd->add_option("--records", records_path, "curve records jsonl")->required();
    bd->add_option("--ref", ref_label, "reference curve label")->required();
    bd->add_option("--test", test_label, "test curve label")->required();

    // ---- plot
    CLI::App* plot = app.add_subcommand("plot", "render recorded curves to SVG");
    plot->add_option("--records", records_path, "curve records jsonl")->required();
    plot->add_option("--output", out_path, "output .svg")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed()) return run_train(train_cli);

        if (encode->parsed()) {
            CodecSystem sys;
            sys.load(model_dir);
            const Tensor img = read_ppm(in_path);
            const std::uint64_t stream_seed = CounterRng::mix(seed, image_index);
            write_binary(out_path, encode_image_stream(sys, img, rate_level, stream_seed));
            return kExitOk;
        }

        if (decode->parsed()) {
            CodecSystem sys;
            sys.load(model_dir);
            DecodeOptions opt;
            opt.mode = parse_fusion(fusion);
            opt.ddim_steps = ddim_steps;
            opt.renormalize = !no_renorm;
            write_ppm(out_path, decode_image_stream(sys, read_binary(in_path), opt));
            return kExitOk;
        }

        if (eval->parsed()) {
            CodecSystem sys;
            sys.load(model_dir);
            ToyCorpus corpus({eval_seed, corpus_size, test_count, sys.config().prior_dims.image,
                              CorpusStyle::Shapes, ""});
            SweepOptions opt;
            opt.metric = metric;
            opt.label = label;
            opt.seed = eval_seed;
            opt.ddim_steps = ddim_steps;
            opt.include_header_bpp = !payload_bpp;
            std::vector<RdCurve> curves;
            curves.push_back(run_rd_sweep(sys, corpus, opt));
            write_curve_records(records_path, curves.back());
            if (ablations) {
                SweepOptions v = opt;
                v.mode = FusionMode::None;
                v.label = label + ".no_adapter";
                curves.push_back(run_rd_sweep(sys, corpus, v));
                v.mode = FusionMode::Additive;
                v.label = label + ".additive_fusion";
                curves.push_back(run_rd_sweep(sys, corpus, v));
                v.mode = FusionMode::Attentive;
                v.renormalize = false;
                v.label = label + ".no_renorm";
                curves.push_back(run_rd_sweep(sys, corpus, v));
            }
            for (const RdCurve& c : curves)
                if (c.label != label) write_curve_records(records_path, c);
            if (!plot_path.empty()) write_rd_plot_svg(plot_path, curves);
            for (const RdCurve& c : curves) {
                std::printf("curve %s (%s):\n", c.label.c_str(), c.metric.c_str());
                for (const RdPoint& p : c.points)
                    std::printf("  level %d  bpp %.4f  %s %.5f\n", p.rate_level, p.bpp,
                                c.metric.c_str(), p.distortion);
            }
            return kExitOk;
        }

        if (bd->parsed()) {
            const std::vector<RdCurve> curves = read_curve_records(records_path);
            const RdCurve* ref = nullptr;
            const RdCurve* test = nullptr;
            for (const RdCurve& c : curves) {
                if (c.label == ref_label) ref = &c;
                if (c.label == test_label) test = &c;
            }
            if (!ref || !test) {
                std::cerr << "label not found in " << records_path << "\n";
                return kExitMissing;
            }
            const BdResult r = bd_metrics(*ref, *test);
            for (const std::string& w : r.warnings) std::cerr << "warning: " << w << "\n";
            std::printf("BD-rate: %+.2f%%\nBD-%s: %+.2f%%\n", r.bd_rate, ref->metric.c_str(),
                        r.bd_distortion);
            return kExitOk;
        }

        if (plot->parsed()) {
            write_rd_plot_svg(out_path, read_curve_records(records_path));
            return kExitOk;
        }
    } catch (const DecodeError& e) {
        std::cerr << "decode error: " << e.what() << "\n";
        return kExitStream;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissing;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
