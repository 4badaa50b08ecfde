#include <doctest.h>

#include <cmath>

#include "gencodec/bd.hpp"
#include "gencodec/errors.hpp"

using namespace gencodec;

namespace {

RdCurve make_curve(const char* label, std::initializer_list<std::pair<double, double>> pts) {
    RdCurve c;
    c.label = label;
    c.metric = "lpips_proxy";
    for (const auto& [bpp, d] : pts) c.points.push_back({bpp, d, 0});
    c.sort_points();
    return c;
}

const RdCurve kRef = make_curve("ref", {{0.05, 0.40}, {0.10, 0.30}, {0.20, 0.22}, {0.40, 0.15}, {0.80, 0.10}});

} // namespace

TEST_CASE("polyfit recovers exact cubics") {
    const std::vector<double> x = {-1.0, 0.0, 0.5, 1.0, 2.0};
    std::vector<double> y;
    for (double xi : x) y.push_back(2.0 - xi + 0.5 * xi * xi - 0.25 * xi * xi * xi);
    const std::vector<double> c = polyfit(x, y, 3);
    CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(c[1] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(c[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c[3] == doctest::Approx(-0.25).epsilon(1e-9));
    CHECK(polyintegral({0.0, 2.0}, 0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("identical curves give zero deltas") {
    const BdResult r = bd_metrics(kRef, kRef);
    CHECK(r.bd_rate == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.bd_distortion == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("half-rate curve at equal distortion gives -50%") {
    RdCurve test = kRef;
    test.label = "half";
    for (RdPoint& p : test.points) p.bpp *= 0.5;
    const BdResult r = bd_metrics(kRef, test);
    CHECK(r.bd_rate == doctest::Approx(-50.0).epsilon(0.002)); // within 0.1 percentage point
}

TEST_CASE("constant distortion improvement recovers the analytic BD-distortion") {
    const double delta = 0.03;
    RdCurve test = kRef;
    test.label = "shift";
    for (RdPoint& p : test.points) p.distortion -= delta;
    const BdResult r = bd_metrics(kRef, test);
    // mean ref distortion over the full log-rate overlap
    std::vector<double> lr, d;
    for (const RdPoint& p : kRef.points) {
        lr.push_back(std::log(p.bpp));
        d.push_back(p.distortion);
    }
    const std::vector<double> fit = polyfit(lr, d, 3);
    const double mean_ref = polyintegral(fit, lr.front(), lr.back()) / (lr.back() - lr.front());
    const double expected = -delta / mean_ref * 100.0;
    CHECK(r.bd_distortion == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("antisymmetry for constant-gap curves") {
    RdCurve test = kRef;
    test.label = "shrunk";
    for (RdPoint& p : test.points) p.bpp *= 0.7;
    const double ab = bd_metrics(kRef, test).bd_rate / 100.0;
    const double ba = bd_metrics(test, kRef).bd_rate / 100.0;
    CHECK(ab == doctest::Approx(-ba / (1.0 + ba)).epsilon(0.005));
}

TEST_CASE("validation and overlap errors") {
    RdCurve three = make_curve("three", {{0.1, 0.3}, {0.2, 0.2}, {0.4, 0.1}});
    CHECK_THROWS_AS(bd_metrics(three, kRef), InvalidArgument);

    RdCurve disjoint = make_curve("disjoint", {{0.05, 4.0}, {0.1, 3.0}, {0.2, 2.5}, {0.4, 2.0}});
    CHECK_THROWS_AS(bd_metrics(kRef, disjoint), InvalidArgument);

    RdCurve bad = kRef;
    bad.points[1].bpp = bad.points[0].bpp; // not strictly increasing
    CHECK_THROWS_AS(bd_metrics(bad, kRef), InvalidArgument);
}

TEST_CASE("non-monotone distortion warns but proceeds") {
    RdCurve wobble = make_curve("wobble", {{0.05, 0.40}, {0.10, 0.31}, {0.20, 0.33}, {0.40, 0.15}, {0.80, 0.10}});
    const BdResult r = bd_metrics(kRef, wobble);
    CHECK(!r.warnings.empty());
}
