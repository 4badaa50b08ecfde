#pragma once

#include <cstdint>
#include <vector>

namespace gencodec {

// MSB-first bit packer. Reading back what was written yields identical bits.
class BitWriter {
public:
    void put_bit(int bit);
    void put_bits(std::uint32_t value, int count); // big-endian within the field
    void put_u8(std::uint8_t v) { put_bits(v, 8); }

    // Pads the final partial byte with zeros.
    std::vector<std::uint8_t> finish();

    std::size_t bit_count() const { return bit_count_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint8_t current_ = 0;
    int filled_ = 0;
    std::size_t bit_count_ = 0;
};

class BitReader {
public:
    explicit BitReader(const std::uint8_t* data, std::size_t size)
        : data_(data), size_(size) {}

    int get_bit();                       // throws DecodeError on exhaustion
    std::uint32_t get_bits(int count);

    std::size_t bits_consumed() const { return cursor_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t cursor_ = 0; // in bits
};

} // namespace gencodec
