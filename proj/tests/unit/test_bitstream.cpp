#include <doctest.h>

#include "gencodec/bitstream.hpp"
#include "gencodec/errors.hpp"
#include "gencodec/rng.hpp"

using namespace gencodec;

namespace {

StreamHeader sample_header() {
    StreamHeader h;
    h.width = 64;
    h.height = 64;
    h.rate_level = 3;
    h.seed = 0x123456789abcdef0ULL;
    h.prior_checksum = 0xfeedface12345678ULL;
    return h;
}

CodedSections sample_sections() {
    CodedSections s;
    s.renorm = {1, 2, 3, 4, 5};
    s.hyper = {9, 8, 7};
    s.main = {0xAA, 0xBB, 0xCC, 0xDD, 0xEE};
    return s;
}

} // namespace

TEST_CASE("header overhead is exactly 36 bytes") {
    const std::vector<std::uint8_t> stream = pack_stream(sample_header(), CodedSections{});
    CHECK(stream.size() == kStreamHeaderBytes);
    // for a 64x64 image that is 36*8/4096 bpp of fixed overhead
    CHECK(36.0 * 8.0 / 4096.0 == doctest::Approx(0.0703).epsilon(1e-3));
}

TEST_CASE("pack/unpack round trip preserves every field and payload byte") {
    const StreamHeader h = sample_header();
    const CodedSections s = sample_sections();
    const auto [h2, s2] = unpack_stream(pack_stream(h, s));
    CHECK(h2.width == h.width);
    CHECK(h2.height == h.height);
    CHECK(h2.rate_level == h.rate_level);
    CHECK(h2.seed == h.seed);
    CHECK(h2.prior_checksum == h.prior_checksum);
    CHECK(s2.renorm == s.renorm);
    CHECK(s2.hyper == s.hyper);
    CHECK(s2.main == s.main);
}

TEST_CASE("dimension overflow rejected at pack time") {
    StreamHeader h = sample_header();
    h.width = 70000;
    CHECK_THROWS_AS(pack_stream(h, sample_sections()), InvalidArgument);
}

TEST_CASE("typed rejections: magic, version, truncation, trailing bytes") {
    std::vector<std::uint8_t> stream = pack_stream(sample_header(), sample_sections());

    {
        std::vector<std::uint8_t> bad = stream;
        bad[0] = 'X';
        try {
            unpack_stream(bad);
            FAIL("bad magic accepted");
        } catch (const DecodeError& e) {
            CHECK(e.fault() == DecodeFault::BadMagic);
        }
    }
    {
        std::vector<std::uint8_t> bad = stream;
        bad[4] = 99;
        try {
            unpack_stream(bad);
            FAIL("bad version accepted");
        } catch (const DecodeError& e) {
            CHECK(e.fault() == DecodeFault::BadVersion);
        }
    }
    {
        std::vector<std::uint8_t> bad(stream.begin(), stream.begin() + 20);
        try {
            unpack_stream(bad);
            FAIL("truncated stream accepted");
        } catch (const DecodeError& e) {
            CHECK(e.fault() == DecodeFault::Truncated);
        }
    }
    {
        std::vector<std::uint8_t> bad = stream;
        bad.push_back(0);
        try {
            unpack_stream(bad);
            FAIL("trailing bytes accepted");
        } catch (const DecodeError& e) {
            CHECK(e.fault() == DecodeFault::BadLength);
        }
    }
}

TEST_CASE("corrupting length fields yields truncation errors, never a crash") {
    const std::vector<std::uint8_t> stream = pack_stream(sample_header(), sample_sections());
    // renorm length field lives at offset 26..27
    for (std::size_t pos : {std::size_t(26), std::size_t(27)}) {
        std::vector<std::uint8_t> bad = stream;
        bad[pos] = 0xFF;
        CHECK_THROWS_AS(unpack_stream(bad), DecodeError);
    }
}

TEST_CASE("container fuzz smoke: random blobs and bit flips raise typed errors only") {
    CounterRng rng(404, 0);
    const std::vector<std::uint8_t> valid = pack_stream(sample_header(), sample_sections());
    int survived = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::uint8_t> data;
        if (trial % 2 == 0) {
            data.resize(static_cast<std::size_t>(rng.uniform_int(0, 120)));
            for (auto& b : data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        } else {
            data = valid;
            const std::size_t bit = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(data.size()) * 8 - 1));
            data[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        }
        try {
            unpack_stream(data);
            ++survived; // flips in payload bytes parse fine at this layer
        } catch (const DecodeError&) {
        }
    }
    CHECK(survived > 0);
}
