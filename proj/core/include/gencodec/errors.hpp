#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gencodec {

// Rejected inputs: caller passed something that violates an operation's
// contract (bad shapes, out-of-range symbols, invalid configs).
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// Every way a serialized payload can be rejected. Decoders must map any
// malformed input to exactly one of these; nothing else may escape.
enum class DecodeFault {
    Truncated,
    BadMagic,
    BadVersion,
    BadLength,
    ChecksumMismatch,
    CorruptPayload,
};

const char* to_string(DecodeFault fault);

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeFault fault, std::size_t position, const std::string& msg);

    DecodeFault fault() const { return fault_; }
    // Byte offset at which the fault was detected.
    std::size_t position() const { return position_; }

private:
    DecodeFault fault_;
    std::size_t position_;
};

} // namespace gencodec
