#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "gencodec/plot.hpp"
#include "gencodec/sweep.hpp"

using namespace gencodec;

namespace {
namespace fs = std::filesystem;

fs::path temp_path(const char* name) {
    static std::atomic<int> counter{0};
    const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    return fs::temp_directory_path() /
           (std::string(name) + "_" + std::to_string(now) + "_" + std::to_string(counter.fetch_add(1)));
}

RdCurve sample_curve(const char* label, double scale) {
    RdCurve c;
    c.label = label;
    c.metric = "lpips_proxy";
    for (int s = 0; s < 5; ++s)
        c.points.push_back({scale * (0.05 + 0.1 * s), 0.4 - 0.06 * s, 9 - s});
    return c;
}

} // namespace

TEST_CASE("curve records round trip through the jsonl format") {
    const fs::path path = temp_path("records");
    const RdCurve a = sample_curve("alpha", 1.0);
    const RdCurve b = sample_curve("beta", 0.5);
    write_curve_records(path.string(), a);
    write_curve_records(path.string(), b);

    const std::vector<RdCurve> curves = read_curve_records(path.string());
    REQUIRE(curves.size() == 2);
    for (const RdCurve& c : curves) {
        const RdCurve& want = c.label == "alpha" ? a : b;
        CHECK(c.metric == want.metric);
        REQUIRE(c.points.size() == want.points.size());
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            CHECK(c.points[i].bpp == doctest::Approx(want.points[i].bpp));
            CHECK(c.points[i].distortion == doctest::Approx(want.points[i].distortion));
            CHECK(c.points[i].rate_level == want.points[i].rate_level);
        }
    }
    fs::remove(path);
}

TEST_CASE("svg plot emission produces a well-formed file with every curve") {
    const fs::path path = temp_path("plot");
    write_rd_plot_svg(path.string(), {sample_curve("alpha", 1.0), sample_curve("beta", 0.5)}, "test");
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string svg((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("alpha") != std::string::npos);
    CHECK(svg.find("beta") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    fs::remove(path);
}
