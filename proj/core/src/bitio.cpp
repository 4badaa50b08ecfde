#include "gencodec/bitio.hpp"

#include "gencodec/errors.hpp"

namespace gencodec {

void BitWriter::put_bit(int bit) {
    current_ = static_cast<std::uint8_t>((current_ << 1) | (bit & 1));
    if (++filled_ == 8) {
        bytes_.push_back(current_);
        current_ = 0;
        filled_ = 0;
    }
    ++bit_count_;
}

void BitWriter::put_bits(std::uint32_t value, int count) {
    for (int i = count - 1; i >= 0; --i) put_bit(static_cast<int>((value >> i) & 1u));
}

std::vector<std::uint8_t> BitWriter::finish() {
    if (filled_ > 0) {
        bytes_.push_back(static_cast<std::uint8_t>(current_ << (8 - filled_)));
        current_ = 0;
        filled_ = 0;
    }
    return std::move(bytes_);
}

int BitReader::get_bit() {
    if (cursor_ >= size_ * 8)
        throw DecodeError(DecodeFault::Truncated, cursor_ / 8, "bit reader exhausted");
    const std::size_t byte = cursor_ / 8;
    const int shift = 7 - static_cast<int>(cursor_ % 8);
    ++cursor_;
    return (data_[byte] >> shift) & 1;
}

std::uint32_t BitReader::get_bits(int count) {
    std::uint32_t v = 0;
    for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint32_t>(get_bit());
    return v;
}

} // namespace gencodec
