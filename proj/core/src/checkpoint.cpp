#include "gencodec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "gencodec/errors.hpp"

namespace gencodec {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'K', 'P'};
constexpr std::uint16_t kVersion = 1;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le(out, bits, 8);
}

class Cursor {
public:
    Cursor(const std::vector<std::uint8_t>& data) : data_(data) {}

    std::uint64_t get_le(int bytes, const char* what) {
        if (pos_ + static_cast<std::size_t>(bytes) > data_.size())
            throw DecodeError(DecodeFault::Truncated, pos_, std::string("checkpoint ends inside ") + what);
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }

    double get_f64(const char* what) {
        const std::uint64_t bits = get_le(8, what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string get_string(std::size_t n, const char* what) {
        if (pos_ + n > data_.size())
            throw DecodeError(DecodeFault::Truncated, pos_, std::string("checkpoint ends inside ") + what);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    const std::vector<std::uint8_t>& data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

CheckpointMeta parse_header(Cursor& cur, std::uint32_t& tensor_count) {
    const std::string magic = cur.get_string(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw DecodeError(DecodeFault::BadMagic, 0, "not a checkpoint file");
    const std::uint16_t version = static_cast<std::uint16_t>(cur.get_le(2, "version"));
    if (version != kVersion)
        throw DecodeError(DecodeFault::BadVersion, 4, "unsupported checkpoint version");
    const std::uint8_t endian = static_cast<std::uint8_t>(cur.get_le(1, "endianness"));
    if (endian != 1)
        throw DecodeError(DecodeFault::CorruptPayload, 6, "unknown endianness marker");

    CheckpointMeta meta;
    const std::uint16_t meta_count = static_cast<std::uint16_t>(cur.get_le(2, "meta count"));
    for (int i = 0; i < meta_count; ++i) {
        const std::size_t klen = static_cast<std::size_t>(cur.get_le(2, "meta key length"));
        const std::string key = cur.get_string(klen, "meta key");
        const std::size_t vlen = static_cast<std::size_t>(cur.get_le(4, "meta value length"));
        meta[key] = cur.get_string(vlen, "meta value");
    }
    tensor_count = static_cast<std::uint32_t>(cur.get_le(4, "tensor count"));
    return meta;
}

} // namespace

void save_checkpoint(const std::string& path, const nn::ParamStore& params, const CheckpointMeta& meta) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_le(out, kVersion, 2);
    out.push_back(1); // little-endian payload
    put_le(out, meta.size(), 2);
    for (const auto& [k, v] : meta) {
        put_le(out, k.size(), 2);
        out.insert(out.end(), k.begin(), k.end());
        put_le(out, v.size(), 4);
        out.insert(out.end(), v.begin(), v.end());
    }
    put_le(out, params.all().size(), 4);
    for (const auto& p : params.all()) {
        put_le(out, p->name.size(), 2);
        out.insert(out.end(), p->name.begin(), p->name.end());
        out.push_back(static_cast<std::uint8_t>(p->value.ndim()));
        for (int d = 0; d < p->value.ndim(); ++d)
            put_le(out, static_cast<std::uint64_t>(p->value.dim(d)), 4);
        for (std::int64_t i = 0; i < p->value.numel(); ++i) put_f64(out, p->value[i]);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore& params) {
    const std::vector<std::uint8_t> data = read_file(path);
    Cursor cur(data);
    std::uint32_t tensor_count = 0;
    CheckpointMeta meta = parse_header(cur, tensor_count);

    std::size_t loaded = 0;
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        const std::size_t nlen = static_cast<std::size_t>(cur.get_le(2, "tensor name length"));
        const std::string name = cur.get_string(nlen, "tensor name");
        const int ndim = static_cast<int>(cur.get_le(1, "tensor rank"));
        std::vector<int> shape(static_cast<std::size_t>(ndim));
        for (int d = 0; d < ndim; ++d) shape[static_cast<std::size_t>(d)] = static_cast<int>(cur.get_le(4, "tensor dim"));

        nn::ParamPtr p = params.find(name);
        if (!p)
            throw DecodeError(DecodeFault::CorruptPayload, 0, "unexpected tensor '" + name + "' in " + path);
        if (p->value.shape() != shape)
            throw DecodeError(DecodeFault::CorruptPayload, 0,
                              "shape mismatch for '" + name + "' in " + path);
        for (std::int64_t j = 0; j < p->value.numel(); ++j) p->value[j] = cur.get_f64("tensor data");
        ++loaded;
    }
    if (loaded != params.all().size())
        throw DecodeError(DecodeFault::CorruptPayload, 0,
                          "checkpoint " + path + " is missing parameters (" +
                              std::to_string(loaded) + "/" + std::to_string(params.all().size()) + ")");
    return meta;
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
    const std::vector<std::uint8_t> data = read_file(path);
    Cursor cur(data);
    std::uint32_t tensor_count = 0;
    return parse_header(cur, tensor_count);
}

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    const std::vector<std::uint8_t> data = read_file(path);
    return fnv1a(data.data(), data.size());
}

std::uint64_t model_pair_checksum(const std::string& prior_path, const std::string& adapter_path) {
    const std::vector<std::uint8_t> prior = read_file(prior_path);
    const std::vector<std::uint8_t> adapter = read_file(adapter_path);
    return fnv1a(adapter.data(), adapter.size(), fnv1a(prior.data(), prior.size()));
}

std::string to_hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

} // namespace gencodec
