#include <doctest.h>

#include "gencodec/bitstream.hpp"
#include "gencodec/cdf.hpp"
#include "gencodec/rans.hpp"

using namespace gencodec;

// Frozen fixtures: these byte strings were produced once by this
// implementation and must decode identically forever. Any change here is a
// format break and needs a version bump.

TEST_CASE("golden entropy stream decodes to the frozen symbol sequence") {
    const double means[] = {0.0, -1.5, 3.25, 0.0, 7.0, -6.5, 0.125, 2.0, -2.0, 0.0, 1.0, -0.5};
    const double scales[] = {1.0, 0.5, 2.0, 0.04, 5.0, 1.25, 0.75, 3.0, 0.33, 10.0, 0.06, 4.0};
    const std::vector<int> symbols = {0, -2, 4, 0, 12, -7, 1, -3, -2, -15, 1, 6};
    std::vector<CdfTable> tables;
    for (int i = 0; i < 12; ++i) tables.push_back(build_cdf(means[i], scales[i], -16, 15));

    const std::vector<std::uint8_t> frozen = {0x16, 0xE1, 0x99, 0x2C, 0x83, 0xAC, 0xB9};
    CHECK(range_encode(symbols, tables) == frozen);
    CHECK(range_decode(frozen, tables) == symbols);
}

TEST_CASE("golden container stream unpacks to the frozen fields") {
    const std::vector<std::uint8_t> frozen = {
        0x47, 0x44, 0x43, 0x31, 0x01, 0x00, 0x40, 0x00, 0x40, 0x04, 0x11, 0x22, 0x33,
        0x44, 0x55, 0x66, 0x77, 0x88, 0xCA, 0xFE, 0xBA, 0xBE, 0xDE, 0xAD, 0xBE, 0xEF,
        0x00, 0x08, 0x10, 0x00, 0x01, 0x00, 0x01, 0xAB, 0xCD, 0xEF, 0x00, 0x00, 0x00,
        0x03, 0x01, 0x02, 0x03, 0x00, 0x00, 0x00, 0x04, 0xF0, 0xE1, 0xD2, 0xC3,
    };
    const auto [h, s] = unpack_stream(frozen);
    CHECK(h.width == 64);
    CHECK(h.height == 64);
    CHECK(h.rate_level == 4);
    CHECK(h.seed == 0x1122334455667788ULL);
    CHECK(h.prior_checksum == 0xCAFEBABEDEADBEEFULL);
    CHECK(s.renorm == std::vector<std::uint8_t>{0x10, 0x00, 0x01, 0x00, 0x01, 0xAB, 0xCD, 0xEF});
    CHECK(s.hyper == std::vector<std::uint8_t>{0x01, 0x02, 0x03});
    CHECK(s.main == std::vector<std::uint8_t>{0xF0, 0xE1, 0xD2, 0xC3});

    StreamHeader h2;
    h2.width = 64;
    h2.height = 64;
    h2.rate_level = 4;
    h2.seed = 0x1122334455667788ULL;
    h2.prior_checksum = 0xCAFEBABEDEADBEEFULL;
    CHECK(pack_stream(h2, s) == frozen);
}
