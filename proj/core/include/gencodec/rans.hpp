#pragma once

#include <cstdint>
#include <vector>

#include "gencodec/cdf.hpp"

namespace gencodec {

// Asymmetric-numeral-system range coder: 32-bit state, 16-bit probability
// precision, byte-at-a-time carry-less renormalization. Integer arithmetic
// only in the state updates, so streams are bit-exact across platforms.
//
// Stream layout: 4-byte big-endian final state, then the renormalization
// bytes in decoder consumption order. An empty message is the 4-byte flush.
//
// Coding overhead versus the quantized-table information content is the
// 32-bit flush minus the free capacity of the initial state; for realistic
// tables it lands in [0, 64] bits regardless of message length.

std::vector<std::uint8_t> range_encode(const std::vector<int>& symbols,
                                       const std::vector<CdfTable>& tables);

std::vector<int> range_decode(const std::vector<std::uint8_t>& data,
                              const std::vector<CdfTable>& tables);

// Information content of `symbols` under the quantized tables, in bits.
double quantized_bits(const std::vector<int>& symbols, const std::vector<CdfTable>& tables);

} // namespace gencodec
