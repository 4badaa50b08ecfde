#include "gencodec/sweep.hpp"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "gencodec/errors.hpp"
#include "gencodec/msssim.hpp"
#include "gencodec/rng.hpp"

namespace gencodec {

namespace {
using json = nlohmann::json;
}

RdCurve run_rd_sweep(const CodecSystem& sys, const ToyCorpus& corpus, const SweepOptions& options) {
    std::vector<int> levels = options.rate_levels;
    if (levels.empty())
        for (int s = 0; s < sys.codec().dims().rate_levels; ++s) levels.push_back(s);

    RdCurve curve;
    curve.label = options.label;
    curve.metric = options.external_metric ? "external" : options.metric;
    curve.lower_better = curve.metric != "msssim";

    const int n = corpus.test_count();
    for (int level : levels) {
        std::vector<double> bpp(static_cast<std::size_t>(n), 0.0);
        std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
        nn::parallel_for(
            n,
            [&](std::int64_t i) {
                const Tensor img = corpus.test_image(static_cast<int>(i));
                const std::uint64_t seed = CounterRng::mix(options.seed, static_cast<std::uint64_t>(i));
                const std::vector<std::uint8_t> stream = encode_image_stream(sys, img, level, seed);
                DecodeOptions dopt;
                dopt.mode = options.mode;
                dopt.ddim_steps = options.ddim_steps;
                dopt.renormalize = options.renormalize;
                const Tensor recon = decode_image_stream(sys, stream, dopt);
                bpp[static_cast<std::size_t>(i)] = options.include_header_bpp
                                                       ? bpp_total(stream.size(), img.dim(2), img.dim(1))
                                                       : bpp_payload(stream.size(), img.dim(2), img.dim(1));
                if (options.external_metric)
                    dist[static_cast<std::size_t>(i)] = options.external_metric(img, recon);
                else if (options.metric == "msssim")
                    dist[static_cast<std::size_t>(i)] = ms_ssim(img, recon, 3);
                else
                    dist[static_cast<std::size_t>(i)] = lpips_proxy(img, recon);
            },
            options.threads);

        RdPoint p;
        p.rate_level = level;
        for (int i = 0; i < n; ++i) {
            p.bpp += bpp[static_cast<std::size_t>(i)];
            p.distortion += dist[static_cast<std::size_t>(i)];
        }
        p.bpp /= n;
        p.distortion /= n;
        curve.points.push_back(p);
    }
    curve.sort_points();
    return curve;
}

std::vector<double> measure_bpp_per_level(const CodecSystem& sys, const ToyCorpus& corpus,
                                          bool include_header, int threads) {
    const int levels = sys.codec().dims().rate_levels;
    const int n = corpus.test_count();
    std::vector<double> out(static_cast<std::size_t>(levels), 0.0);
    for (int s = 0; s < levels; ++s) {
        std::vector<double> bpp(static_cast<std::size_t>(n), 0.0);
        nn::parallel_for(
            n,
            [&](std::int64_t i) {
                const Tensor img = corpus.test_image(static_cast<int>(i));
                const std::vector<std::uint8_t> stream =
                    encode_image_stream(sys, img, s, CounterRng::mix(42, static_cast<std::uint64_t>(i)));
                bpp[static_cast<std::size_t>(i)] = include_header
                                                       ? bpp_total(stream.size(), img.dim(2), img.dim(1))
                                                       : bpp_payload(stream.size(), img.dim(2), img.dim(1));
            },
            threads);
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(s)] += bpp[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(s)] /= n;
    }
    return out;
}

void write_curve_records(const std::string& path, const RdCurve& curve) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw InvalidArgument("cannot write " + path);
    for (const RdPoint& p : curve.points) {
        const json row = {{"label", curve.label},
                          {"rate_level", p.rate_level},
                          {"bpp", p.bpp},
                          {"metric", curve.metric},
                          {"value", p.distortion}};
        out << row.dump() << "\n";
    }
}

std::vector<RdCurve> read_curve_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::map<std::string, RdCurve> curves;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json row = json::parse(line);
        const std::string label = row.at("label").get<std::string>();
        RdCurve& c = curves[label];
        c.label = label;
        c.metric = row.at("metric").get<std::string>();
        c.lower_better = c.metric != "msssim";
        RdPoint p;
        p.rate_level = row.at("rate_level").get<int>();
        p.bpp = row.at("bpp").get<double>();
        p.distortion = row.at("value").get<double>();
        c.points.push_back(p);
    }
    std::vector<RdCurve> out;
    for (auto& [label, curve] : curves) {
        curve.sort_points();
        out.push_back(std::move(curve));
    }
    return out;
}

} // namespace gencodec
