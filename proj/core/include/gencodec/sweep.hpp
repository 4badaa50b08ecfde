#pragma once

#include <string>
#include <vector>

#include "gencodec/bd.hpp"
#include "gencodec/corpus.hpp"
#include "gencodec/metrics.hpp"
#include "gencodec/pipeline.hpp"

namespace gencodec {

struct SweepOptions {
    std::vector<int> rate_levels;  // empty = all
    int ddim_steps = 10;
    std::uint64_t seed = 42;       // per-image decode seeds derive from this
    std::string metric = "lpips_proxy"; // or "msssim"
    bool include_header_bpp = true;     // total vs payload rate accounting
    FusionMode mode = FusionMode::Attentive;
    bool renormalize = true;
    std::string label = "gencodec";
    int threads = 0;
    PerceptualMetric external_metric; // optional plug-in perceptual metric
};

// Mean bpp / mean distortion per rate level over corpus.test images through
// the full encode -> decode pipeline.
RdCurve run_rd_sweep(const CodecSystem& sys, const ToyCorpus& corpus, const SweepOptions& options);

// Encode-only rate sweep (no generative decode): mean actual coded bpp per
// level, used for rate-monotonicity and span checks.
std::vector<double> measure_bpp_per_level(const CodecSystem& sys, const ToyCorpus& corpus,
                                          bool include_header, int threads = 0);

// Line-delimited curve records {label, rate_level, bpp, metric, value}.
void write_curve_records(const std::string& path, const RdCurve& curve);
std::vector<RdCurve> read_curve_records(const std::string& path); // grouped by label

} // namespace gencodec
