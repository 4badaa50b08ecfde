#include "gencodec/pipeline.hpp"

#include <filesystem>

#include "gencodec/checkpoint.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/rans.hpp"

namespace gencodec {

CodecSystem::CodecSystem(SystemConfig cfg)
    : cfg_(cfg),
      codec_(cfg.codec_dims, cfg.init_seed),
      prior_(cfg.prior_dims, cfg.init_seed),
      adapter_(prior_.tap_registry(), cfg.codec_dims.latent_channels, cfg.prior_dims.image / 4,
               cfg.init_seed) {}

void CodecSystem::load(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string codec_path = (fs::path(dir) / CheckpointNames::codec).string();
    const std::string prior_path = (fs::path(dir) / CheckpointNames::prior).string();
    const std::string adapter_path = (fs::path(dir) / CheckpointNames::adapter).string();
    for (const std::string& p : {codec_path, prior_path, adapter_path})
        if (!fs::exists(p)) throw InvalidArgument("missing checkpoint: " + p);

    load_checkpoint(codec_path, codec_.params());
    load_checkpoint(prior_path, prior_.params());
    load_checkpoint(adapter_path, adapter_.params());
    codec_.params().freeze();
    prior_.params().freeze();
    adapter_.params().freeze();
    model_checksum_ = model_pair_checksum(prior_path, adapter_path);
}

std::vector<std::uint8_t> encode_image_stream(const CodecSystem& sys, const Tensor& image,
                                              int rate_level, std::uint64_t seed) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw InvalidArgument("encode: expected [3,H,W] image");
    if (image.dim(1) != sys.config().prior_dims.image || image.dim(2) != sys.config().prior_dims.image)
        throw InvalidArgument("encode: the loaded prior handles " +
                              std::to_string(sys.config().prior_dims.image) + "x" +
                              std::to_string(sys.config().prior_dims.image) + " images, got " +
                              image.shape_str());

    const CompressedLatent lat = sys.codec().encode_latent(image, rate_level);
    const RenormParams renorm = compute_params(image, sys.config().renorm_block);

    CodedSections sections;
    sections.renorm = serialize_params(renorm);
    sections.hyper = range_encode(lat.z_q, sys.codec().z_tables(lat.z_c, lat.z_h, lat.z_w));
    sections.main = range_encode(lat.y_q, sys.codec().y_tables(lat));

    StreamHeader header;
    header.width = image.dim(2);
    header.height = image.dim(1);
    header.rate_level = rate_level;
    header.seed = seed;
    header.prior_checksum = sys.model_checksum();
    return pack_stream(header, sections);
}

DecodedLatents decode_stream_latents(const CodecSystem& sys, const std::vector<std::uint8_t>& data,
                                     bool verify_checksum) {
    auto [header, sections] = unpack_stream(data);
    if (verify_checksum && header.prior_checksum != sys.model_checksum())
        throw DecodeError(DecodeFault::ChecksumMismatch, 18,
                          "stream was coded against models " + to_hex(header.prior_checksum) +
                              " but " + to_hex(sys.model_checksum()) + " is loaded");
    if (header.width % 16 != 0 || header.height % 16 != 0)
        throw DecodeError(DecodeFault::CorruptPayload, 5, "dimensions must be multiples of 16");
    if (header.width > 512 || header.height > 512)
        throw DecodeError(DecodeFault::CorruptPayload, 5,
                          "dimensions exceed the supported toy scale (512 per axis)");
    if (header.rate_level >= sys.codec().dims().rate_levels)
        throw DecodeError(DecodeFault::CorruptPayload, 9,
                          "rate level " + std::to_string(header.rate_level) + " out of range");

    DecodedLatents out;
    out.header = header;
    out.renorm = deserialize_params(sections.renorm);

    CompressedLatent& lat = out.latent;
    lat.rate_level = header.rate_level;
    lat.y_c = sys.codec().dims().latent_channels;
    lat.y_h = header.height / 4;
    lat.y_w = header.width / 4;
    lat.z_c = sys.codec().dims().hyper_channels;
    lat.z_h = header.height / 16;
    lat.z_w = header.width / 16;
    lat.z_q = range_decode(sections.hyper, sys.codec().z_tables(lat.z_c, lat.z_h, lat.z_w));
    lat.y_q = range_decode(sections.main, sys.codec().y_tables(lat));
    return out;
}

Tensor decode_image_stream(const CodecSystem& sys, const std::vector<std::uint8_t>& data,
                           const DecodeOptions& options) {
    const DecodedLatents dec = decode_stream_latents(sys, data, options.verify_checksum);
    if (dec.header.width != sys.config().prior_dims.image ||
        dec.header.height != sys.config().prior_dims.image)
        throw DecodeError(DecodeFault::CorruptPayload, 5,
                          "stream dimensions unsupported by the loaded prior");

    const Tensor y_hat = sys.codec().dequantize(dec.latent);

    Tensor z0;
    if (options.mode == FusionMode::None) {
        z0 = sys.prior().ddim_sample(dec.header.seed, options.ddim_steps, nullptr);
    } else {
        const ControlFeatureSet control = sys.adapter().adapt(y_hat);
        const UNetControl ctl = sys.adapter().make_control(control, options.mode);
        z0 = sys.prior().ddim_sample(dec.header.seed, options.ddim_steps, &ctl);
    }

    ag::Graph g;
    nn::Binding bind(g);
    ag::Value* img = sys.prior().vae_decode_graph(bind, g.leaf(sys.prior().denormalize_latent(z0)));
    Tensor out = img->val.clone();

    if (options.renormalize) out = apply_renorm(out, dec.renorm);
    return out;
}

double bpp_total(std::size_t stream_bytes, int width, int height) {
    return 8.0 * static_cast<double>(stream_bytes) / (static_cast<double>(width) * height);
}

double bpp_payload(std::size_t stream_bytes, int width, int height) {
    const std::size_t payload = stream_bytes > kStreamHeaderBytes ? stream_bytes - kStreamHeaderBytes : 0;
    return 8.0 * static_cast<double>(payload) / (static_cast<double>(width) * height);
}

} // namespace gencodec
