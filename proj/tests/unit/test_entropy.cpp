#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gencodec/cdf.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/rans.hpp"
#include "gencodec/rng.hpp"

using namespace gencodec;

namespace {

CdfTable random_table(CounterRng& rng, int lo = -32, int hi = 31) {
    const double mean = rng.uniform(-8.0, 8.0);
    const double scale = rng.uniform(0.3, 8.0);
    return build_cdf(mean, scale, lo, hi);
}

int sample_symbol(const CdfTable& t, CounterRng& rng) {
    const std::uint32_t cf = static_cast<std::uint32_t>(rng.uniform_int(0, kProbScale - 1));
    return t.lookup(cf);
}

} // namespace

TEST_CASE("cdf table structural invariants") {
    CounterRng rng(1, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const CdfTable t = random_table(rng);
        CHECK(t.cdf.front() == 0);
        CHECK(t.cdf.back() == kProbScale);
        CHECK(static_cast<std::uint32_t>(t.symbol_count()) < kProbScale);
        for (int s = t.lo; s <= t.hi; ++s) CHECK(t.freq(s) >= 1); // no zero-width intervals
    }
}

TEST_CASE("degenerate scale concentrates mass on the mode") {
    const CdfTable t = build_cdf(0.0, kScaleMin, -2, 2);
    CHECK(static_cast<double>(t.freq(0)) / kProbScale >= 0.999);
    for (int s : {-2, -1, 1, 2}) CHECK(t.freq(s) == 1); // clamped to the minimum mass
}

TEST_CASE("table mass tracks the Gaussian within renormalization error") {
    // 17 symbols, so the worst-case redistribution is 17 table units.
    const CdfTable t = build_cdf(0.0, 1.0, -8, 8);
    const double expected = std_normal_cdf(0.5) - std_normal_cdf(-0.5); // 0.382924...
    CHECK(expected == doctest::Approx(0.3829).epsilon(1e-3));
    const double got = static_cast<double>(t.freq(0)) / kProbScale;
    CHECK(std::fabs(got - expected) <= 17.0 / kProbScale);
}

TEST_CASE("symmetric table within one unit") {
    const CdfTable t = build_cdf(0.0, 2.5, -16, 16);
    for (int s = 1; s <= 16; ++s)
        CHECK(std::abs(static_cast<long>(t.freq(s)) - static_cast<long>(t.freq(-s))) <= 1);
}

TEST_CASE("build_cdf rejects invalid ranges and scales") {
    CHECK_THROWS_AS(build_cdf(0.0, 1.0, 5, 5), InvalidArgument);
    CHECK_THROWS_AS(build_cdf(0.0, 1.0, 6, 2), InvalidArgument);
    CHECK_THROWS_AS(build_cdf(0.0, 0.01, -4, 4), InvalidArgument);
}

TEST_CASE("range coder round trip over randomized tables, many trials") {
    CounterRng rng(2, 0);
    for (int trial = 0; trial < 400; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(0, 300));
        std::vector<CdfTable> tables;
        std::vector<int> symbols;
        tables.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            tables.push_back(random_table(rng));
            symbols.push_back(sample_symbol(tables.back(), rng));
        }
        const std::vector<std::uint8_t> coded = range_encode(symbols, tables);
        CHECK(range_decode(coded, tables) == symbols);
    }
}

TEST_CASE("encoding is deterministic") {
    CounterRng rng(3, 0);
    std::vector<CdfTable> tables;
    std::vector<int> symbols;
    for (int i = 0; i < 500; ++i) {
        tables.push_back(random_table(rng));
        symbols.push_back(sample_symbol(tables.back(), rng));
    }
    CHECK(range_encode(symbols, tables) == range_encode(symbols, tables));
}

TEST_CASE("empty sequence flushes to at most 8 bytes") {
    const std::vector<std::uint8_t> coded = range_encode({}, {});
    CHECK(coded.size() <= 8);
    CHECK(range_decode(coded, {}).empty());
}

TEST_CASE("compression bound: coded bits minus information content in [0, 64]") {
    CounterRng rng(4, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(100, 3000));
        std::vector<CdfTable> tables;
        std::vector<int> symbols;
        for (int i = 0; i < n; ++i) {
            tables.push_back(random_table(rng));
            symbols.push_back(sample_symbol(tables.back(), rng));
        }
        const double info = quantized_bits(symbols, tables);
        const double coded_bits = 8.0 * static_cast<double>(range_encode(symbols, tables).size());
        CHECK(coded_bits - info >= 0.0);
        CHECK(coded_bits - info <= 64.0);
    }
}

TEST_CASE("near-deterministic stream stays tiny") {
    const CdfTable t = build_cdf(0.0, kScaleMin, -2, 2);
    const std::vector<CdfTable> tables(1000, t);
    const std::vector<int> symbols(1000, 0);
    const std::vector<std::uint8_t> coded = range_encode(symbols, tables);
    // -log2 p(0) with p >= 0.999, plus the 32-bit flush
    CHECK(static_cast<double>(coded.size()) <= 1000.0 * (-std::log2(0.999)) / 8.0 + 32.0);
    CHECK(range_decode(coded, tables) == symbols);
}

TEST_CASE("out-of-range symbols are a hard error, never clamped") {
    const CdfTable t = build_cdf(0.0, 1.0, -4, 4);
    CHECK_THROWS_AS(range_encode({5}, {t}), InvalidArgument);
    CHECK_THROWS_AS(range_encode({-5}, {t}), InvalidArgument);
}

TEST_CASE("mismatched lengths rejected") {
    const CdfTable t = build_cdf(0.0, 1.0, -4, 4);
    CHECK_THROWS_AS(range_encode({0, 1}, {t}), InvalidArgument);
}

TEST_CASE("truncated stream raises a typed error with a position") {
    CounterRng rng(5, 0);
    std::vector<CdfTable> tables;
    std::vector<int> symbols;
    for (int i = 0; i < 200; ++i) {
        tables.push_back(random_table(rng));
        symbols.push_back(sample_symbol(tables.back(), rng));
    }
    std::vector<std::uint8_t> coded = range_encode(symbols, tables);
    coded.resize(coded.size() / 2);
    try {
        range_decode(coded, tables);
        FAIL("expected a decode error");
    } catch (const DecodeError& e) {
        CHECK((e.fault() == DecodeFault::Truncated || e.fault() == DecodeFault::CorruptPayload));
        CHECK(e.position() <= coded.size());
    }
    CHECK_THROWS_AS(range_decode({0x01, 0x02}, tables), DecodeError);
}
