#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace gencodec {

// Container wire format, all integers big-endian:
//
//   offset size  field
//   0      4     magic "GDC1"
//   4      1     version (1)
//   5      2     width
//   7      2     height
//   9      1     rate level
//   10     8     decode seed
//   18     8     prior+adapter checkpoint checksum (truncated FNV-1a 64)
//   26     2     renorm section length, followed by that many bytes
//   ..     4     hyper section length, followed by that many bytes
//   ..     4     main section length, followed by that many bytes
//
// Fixed header overhead before payloads: 36 bytes.
inline constexpr std::size_t kStreamHeaderBytes = 36;
inline constexpr std::uint8_t kStreamVersion = 1;

struct StreamHeader {
    int width = 0;
    int height = 0;
    int rate_level = 0;
    std::uint64_t seed = 0;
    std::uint64_t prior_checksum = 0;
};

struct CodedSections {
    std::vector<std::uint8_t> renorm;
    std::vector<std::uint8_t> hyper;
    std::vector<std::uint8_t> main;
};

std::vector<std::uint8_t> pack_stream(const StreamHeader& header, const CodedSections& sections);
std::pair<StreamHeader, CodedSections> unpack_stream(const std::vector<std::uint8_t>& data);

} // namespace gencodec
