#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mpstep::io {

// Binary container shared by datasets and checkpoints:
//
//   magic[4] | version u16 | header_len u64 | header (UTF-8 JSON)
//   | payload (little-endian float64, C order) | crc32(payload) u32
//
// All integers are little-endian.
struct Container {
  std::string magic;
  std::uint16_t version = 0;
  nlohmann::json header;
  std::vector<double> payload;
};

std::uint32_t crc32(std::span<const double> payload);

void write_container(const std::filesystem::path& path, std::string_view magic,
                     std::uint16_t version, const nlohmann::json& header,
                     std::span<const double> payload);

// Throws FormatError on bad magic or malformed header, VersionError on a
// version mismatch, TruncatedError when the file ends early and
// ChecksumError when the payload CRC does not match.
Container read_container(const std::filesystem::path& path, std::string_view magic,
                         std::uint16_t version);

// Validates that shapes declared in the header account for exactly the
// payload length.
void check_payload_size(const Container& c, std::size_t expected);

}  // namespace mpstep::io
