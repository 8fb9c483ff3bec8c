#include "common/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "common/error.hpp"

namespace mpstep::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
  if (in.size() < pos + sizeof(T)) {
    throw TruncatedError("truncated file: " + path.string());
  }
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::uint32_t crc32(std::span<const double> payload) {
  const auto* bytes = reinterpret_cast<const Bytef*>(payload.data());
  std::size_t remaining = payload.size_bytes();
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (remaining > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(remaining, 1u << 30));
    crc = ::crc32(crc, bytes, chunk);
    bytes += chunk;
    remaining -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_container(const std::filesystem::path& path, std::string_view magic,
                     std::uint16_t version, const nlohmann::json& header,
                     std::span<const double> payload) {
  std::string out;
  nlohmann::json full = header;
  full["payload_values"] = payload.size();
  const std::string text = full.dump();
  out.reserve(4 + 2 + 8 + text.size() + payload.size_bytes() + 4);
  out.append(magic.data(), magic.size());
  put<std::uint16_t>(out, version);
  put<std::uint64_t>(out, text.size());
  out.append(text);
  out.append(reinterpret_cast<const char*>(payload.data()), payload.size_bytes());
  put<std::uint32_t>(out, crc32(payload));

  // Write to a sibling and rename so readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

Container read_container(const std::filesystem::path& path, std::string_view magic,
                         std::uint16_t version) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  const std::string in{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};

  Container c;
  if (in.size() < magic.size()) throw TruncatedError("truncated file: " + path.string());
  c.magic = in.substr(0, magic.size());
  if (c.magic != magic) {
    throw FormatError("bad magic in " + path.string() + ": expected '" + std::string(magic) + "'");
  }
  std::size_t pos = magic.size();
  c.version = get<std::uint16_t>(in, pos, path);
  if (c.version != version) {
    throw VersionError("unsupported format version " + std::to_string(c.version) + " in " +
                       path.string() + " (expected " + std::to_string(version) + ")");
  }
  const auto header_len = get<std::uint64_t>(in, pos, path);
  if (in.size() < pos + header_len) throw TruncatedError("truncated header: " + path.string());
  try {
    c.header = nlohmann::json::parse(in.begin() + static_cast<std::ptrdiff_t>(pos),
                                     in.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed header in " + path.string() + ": " + e.what());
  }
  pos += header_len;

  if (in.size() < pos + sizeof(std::uint32_t)) throw TruncatedError("truncated payload: " + path.string());
  const std::size_t payload_bytes = in.size() - pos - sizeof(std::uint32_t);
  if (!c.header.contains("payload_values") || !c.header["payload_values"].is_number_unsigned()) {
    throw FormatError("header of " + path.string() + " lacks payload_values");
  }
  const auto declared = c.header["payload_values"].get<std::size_t>();
  const std::size_t actual = payload_bytes / sizeof(double);
  if (payload_bytes < declared * sizeof(double)) {
    throw TruncatedError("truncated payload in " + path.string() + ": " + std::to_string(actual) +
                         " of " + std::to_string(declared) + " values present");
  }
  if (payload_bytes != declared * sizeof(double)) {
    throw FormatError("payload of " + path.string() + " is longer than declared");
  }
  c.payload.resize(actual);
  std::memcpy(c.payload.data(), in.data() + pos, payload_bytes);
  pos += payload_bytes;
  const auto stored_crc = get<std::uint32_t>(in, pos, path);
  if (stored_crc != crc32(c.payload)) throw ChecksumError("checksum mismatch in " + path.string());
  return c;
}

void check_payload_size(const Container& c, std::size_t expected) {
  if (c.payload.size() < expected) {
    throw TruncatedError("payload holds " + std::to_string(c.payload.size()) +
                         " values but the header declares " + std::to_string(expected));
  }
  if (c.payload.size() != expected) {
    throw FormatError("header-declared shape (" + std::to_string(expected) +
                      " values) inconsistent with payload length " +
                      std::to_string(c.payload.size()));
  }
}

}  // namespace mpstep::io
