#include "gencodec/errors.hpp"

namespace gencodec {

const char* to_string(DecodeFault fault) {
    switch (fault) {
        case DecodeFault::Truncated: return "truncated";
        case DecodeFault::BadMagic: return "bad-magic";
        case DecodeFault::BadVersion: return "bad-version";
        case DecodeFault::BadLength: return "bad-length";
        case DecodeFault::ChecksumMismatch: return "checksum-mismatch";
        case DecodeFault::CorruptPayload: return "corrupt-payload";
    }
    return "unknown";
}

DecodeError::DecodeError(DecodeFault fault, std::size_t position, const std::string& msg)
    : std::runtime_error("[" + std::string(to_string(fault)) + " @" + std::to_string(position) + "] " + msg),
      fault_(fault),
      position_(position) {}

} // namespace gencodec
