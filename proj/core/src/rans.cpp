#include "gencodec/rans.hpp"

#include <algorithm>

#include "gencodec/errors.hpp"

namespace gencodec {

namespace {

// Lower bound of the normalized state interval [kStateLow, 2^31).
constexpr std::uint32_t kStateLow = 1u << 23;

} // namespace

std::vector<std::uint8_t> range_encode(const std::vector<int>& symbols,
                                       const std::vector<CdfTable>& tables) {
    if (symbols.size() != tables.size())
        throw InvalidArgument("range_encode: symbol/table count mismatch");

    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (!tables[i].contains(symbols[i]))
            throw InvalidArgument("range_encode: symbol " + std::to_string(symbols[i]) +
                                  " outside table range at index " + std::to_string(i));
    }

    // Symbols are folded into the state back to front so the decoder can
    // emit them front to back.
    std::vector<std::uint8_t> renorm;
    renorm.reserve(symbols.size() + 8);
    std::uint32_t x = kStateLow;
    for (std::size_t i = symbols.size(); i-- > 0;) {
        const CdfTable& t = tables[i];
        const std::uint32_t f = t.freq(symbols[i]);
        const std::uint32_t c = t.cum(symbols[i]);
        const std::uint32_t x_max = ((kStateLow >> kProbBits) << 8) * f;
        while (x >= x_max) {
            renorm.push_back(static_cast<std::uint8_t>(x & 0xFF));
            x >>= 8;
        }
        x = ((x / f) << kProbBits) + (x % f) + c;
    }

    std::vector<std::uint8_t> out;
    out.reserve(renorm.size() + 4);
    out.push_back(static_cast<std::uint8_t>(x >> 24));
    out.push_back(static_cast<std::uint8_t>(x >> 16));
    out.push_back(static_cast<std::uint8_t>(x >> 8));
    out.push_back(static_cast<std::uint8_t>(x));
    out.insert(out.end(), renorm.rbegin(), renorm.rend());
    return out;
}

std::vector<int> range_decode(const std::vector<std::uint8_t>& data,
                              const std::vector<CdfTable>& tables) {
    if (data.size() < 4)
        throw DecodeError(DecodeFault::Truncated, data.size(), "range stream shorter than flush");

    std::uint32_t x = (static_cast<std::uint32_t>(data[0]) << 24) |
                      (static_cast<std::uint32_t>(data[1]) << 16) |
                      (static_cast<std::uint32_t>(data[2]) << 8) |
                      static_cast<std::uint32_t>(data[3]);
    std::size_t cursor = 4;

    std::vector<int> symbols(tables.size());
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const CdfTable& t = tables[i];
        const std::uint32_t cf = x & (kProbScale - 1);
        const int sym = t.lookup(cf);
        const std::uint32_t f = t.freq(sym);
        const std::uint32_t c = t.cum(sym);
        x = f * (x >> kProbBits) + cf - c;
        while (x < kStateLow) {
            if (cursor >= data.size())
                throw DecodeError(DecodeFault::Truncated, cursor,
                                  "range stream exhausted at symbol " + std::to_string(i));
            x = (x << 8) | data[cursor++];
        }
        symbols[i] = sym;
    }

    // A well-formed stream returns the state to its initial value and leaves
    // no unread bytes; anything else is corruption.
    if (x != kStateLow)
        throw DecodeError(DecodeFault::CorruptPayload, cursor, "range coder state mismatch after decode");
    if (cursor != data.size())
        throw DecodeError(DecodeFault::BadLength, cursor, "trailing bytes after range decode");
    return symbols;
}

double quantized_bits(const std::vector<int>& symbols, const std::vector<CdfTable>& tables) {
    double bits = 0.0;
    for (std::size_t i = 0; i < symbols.size(); ++i) bits += tables[i].bits(symbols[i]);
    return bits;
}

} // namespace gencodec
