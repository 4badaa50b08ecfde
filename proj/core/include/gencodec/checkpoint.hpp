#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gencodec/nn.hpp"

namespace gencodec {

// Canonical checkpoint file names inside a model directory.
struct CheckpointNames {
    static constexpr const char* codec = "codec.gckp";
    static constexpr const char* codec_aux = "codec_aux.gckp";
    static constexpr const char* prior = "prior.gckp";
    static constexpr const char* adapter = "adapter.gckp";
};

// Versioned tensor container: magic "GCKP", version, explicit little-endian
// marker, string metadata, then named f64 tensors with declared shapes in
// registration order.
using CheckpointMeta = std::map<std::string, std::string>;

void save_checkpoint(const std::string& path, const nn::ParamStore& params,
                     const CheckpointMeta& meta = {});

// Loads into an already-constructed store; every registered parameter must be
// present with a matching shape.
CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore& params);

CheckpointMeta read_checkpoint_meta(const std::string& path);

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::string& path);
// Content hash binding a stream to the exact prior + adapter pair.
std::uint64_t model_pair_checksum(const std::string& prior_path, const std::string& adapter_path);

std::string to_hex(std::uint64_t v);

} // namespace gencodec
