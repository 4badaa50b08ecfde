#include "gencodec/bitstream.hpp"

#include <cstring>

#include "gencodec/errors.hpp"

namespace gencodec {

namespace {

constexpr char kMagic[4] = {'G', 'D', 'C', '1'};

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Cursor {
public:
    Cursor(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint64_t get_be(int bytes, const char* what) {
        if (pos_ + static_cast<std::size_t>(bytes) > size_)
            throw DecodeError(DecodeFault::Truncated, pos_, std::string("stream ends inside ") + what);
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }

    std::vector<std::uint8_t> get_bytes(std::size_t n, const char* what) {
        if (pos_ + n > size_)
            throw DecodeError(DecodeFault::Truncated, pos_, std::string("stream ends inside ") + what);
        std::vector<std::uint8_t> v(data_ + pos_, data_ + pos_ + n);
        pos_ += n;
        return v;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> pack_stream(const StreamHeader& header, const CodedSections& sections) {
    if (header.width < 1 || header.width > 65535 || header.height < 1 || header.height > 65535)
        throw InvalidArgument("pack_stream: dimensions must fit in 16 bits");
    if (header.rate_level < 0 || header.rate_level > 255)
        throw InvalidArgument("pack_stream: rate level must fit in 8 bits");
    if (sections.renorm.size() > 65535)
        throw InvalidArgument("pack_stream: renorm section too large");
    if (sections.hyper.size() > 0xFFFFFFFFull || sections.main.size() > 0xFFFFFFFFull)
        throw InvalidArgument("pack_stream: coded section too large");

    std::vector<std::uint8_t> out;
    out.reserve(kStreamHeaderBytes + sections.renorm.size() + sections.hyper.size() + sections.main.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kStreamVersion);
    put_be(out, static_cast<std::uint64_t>(header.width), 2);
    put_be(out, static_cast<std::uint64_t>(header.height), 2);
    out.push_back(static_cast<std::uint8_t>(header.rate_level));
    put_be(out, header.seed, 8);
    put_be(out, header.prior_checksum, 8);
    put_be(out, sections.renorm.size(), 2);
    out.insert(out.end(), sections.renorm.begin(), sections.renorm.end());
    put_be(out, sections.hyper.size(), 4);
    out.insert(out.end(), sections.hyper.begin(), sections.hyper.end());
    put_be(out, sections.main.size(), 4);
    out.insert(out.end(), sections.main.begin(), sections.main.end());
    return out;
}

std::pair<StreamHeader, CodedSections> unpack_stream(const std::vector<std::uint8_t>& data) {
    Cursor cur(data.data(), data.size());
    const std::vector<std::uint8_t> magic = cur.get_bytes(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw DecodeError(DecodeFault::BadMagic, 0, "not a coded stream");
    const std::uint8_t version = static_cast<std::uint8_t>(cur.get_be(1, "version"));
    if (version != kStreamVersion)
        throw DecodeError(DecodeFault::BadVersion, 4,
                          "unsupported stream version " + std::to_string(version));

    StreamHeader h;
    h.width = static_cast<int>(cur.get_be(2, "width"));
    h.height = static_cast<int>(cur.get_be(2, "height"));
    h.rate_level = static_cast<int>(cur.get_be(1, "rate level"));
    h.seed = cur.get_be(8, "seed");
    h.prior_checksum = cur.get_be(8, "checksum");
    if (h.width < 1 || h.height < 1)
        throw DecodeError(DecodeFault::CorruptPayload, 5, "zero image dimension");

    CodedSections s;
    const std::size_t renorm_len = static_cast<std::size_t>(cur.get_be(2, "renorm length"));
    s.renorm = cur.get_bytes(renorm_len, "renorm payload");
    const std::size_t hyper_len = static_cast<std::size_t>(cur.get_be(4, "hyper length"));
    s.hyper = cur.get_bytes(hyper_len, "hyper payload");
    const std::size_t main_len = static_cast<std::size_t>(cur.get_be(4, "main length"));
    s.main = cur.get_bytes(main_len, "main payload");

    if (cur.remaining() != 0)
        throw DecodeError(DecodeFault::BadLength, cur.pos(),
                          std::to_string(cur.remaining()) + " trailing bytes after stream");
    return {h, s};
}

} // namespace gencodec
