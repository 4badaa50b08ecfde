#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gencodec/adapter.hpp"
#include "gencodec/bitstream.hpp"
#include "gencodec/checkpoint.hpp"
#include "gencodec/codec.hpp"
#include "gencodec/diffusion.hpp"
#include "gencodec/renorm.hpp"
#include "gencodec/tensor.hpp"

namespace gencodec {

struct SystemConfig {
    CodecDims codec_dims;
    PriorDims prior_dims;
    std::uint64_t init_seed = 42;
    int renorm_block = 16;
};

// The assembled codec: encoder/hyperprior, frozen prior, adapter+fusion.
class CodecSystem {
public:
    explicit CodecSystem(SystemConfig cfg = {});

    CodecModel& codec() { return codec_; }
    const CodecModel& codec() const { return codec_; }
    PriorModel& prior() { return prior_; }
    const PriorModel& prior() const { return prior_; }
    AdapterModel& adapter() { return adapter_; }
    const AdapterModel& adapter() const { return adapter_; }
    const SystemConfig& config() const { return cfg_; }

    // Checksum of the prior+adapter checkpoint pair embedded into streams.
    std::uint64_t model_checksum() const { return model_checksum_; }
    void set_model_checksum(std::uint64_t c) { model_checksum_ = c; }

    // Loads codec + prior + adapter from a directory and freezes everything.
    void load(const std::string& dir);

private:
    SystemConfig cfg_;
    CodecModel codec_;
    PriorModel prior_;
    AdapterModel adapter_;
    std::uint64_t model_checksum_ = 0;
};

std::vector<std::uint8_t> encode_image_stream(const CodecSystem& sys, const Tensor& image,
                                              int rate_level, std::uint64_t seed);

// Container + entropy stage of decoding (everything that parses bytes); the
// generative stage consumes its output. Fuzzing exercises exactly this.
struct DecodedLatents {
    StreamHeader header;
    RenormParams renorm;
    CompressedLatent latent;
};
DecodedLatents decode_stream_latents(const CodecSystem& sys, const std::vector<std::uint8_t>& data,
                                     bool verify_checksum = true);

struct DecodeOptions {
    FusionMode mode = FusionMode::Attentive;
    int ddim_steps = 10;
    bool renormalize = true;
    bool verify_checksum = true;
};
Tensor decode_image_stream(const CodecSystem& sys, const std::vector<std::uint8_t>& data,
                           const DecodeOptions& options = {});

// Rate accounting for RD curves: total includes the 36-byte container
// header, payload excludes it.
double bpp_total(std::size_t stream_bytes, int width, int height);
double bpp_payload(std::size_t stream_bytes, int width, int height);

} // namespace gencodec
