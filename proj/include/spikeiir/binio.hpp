// Byte-level file helpers shared by the binary containers (checkpoints,
// spike files, IDX datasets). All multi-byte writes state their endianness in
// the function name; doubles travel as their IEEE-754 bit patterns so round
// trips are exact.
#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikeiir::binio {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0 &&
      !in.read(reinterpret_cast<char*>(bytes.data()), size))
    throw std::runtime_error("cannot read file: " + path);
  return bytes;
}

inline void write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  if (!bytes.empty())
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct Writer {
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
  }
  void u64le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
  }
  void i64le(std::int64_t v) { u64le(static_cast<std::uint64_t>(v)); }
  void f64le(double v) { u64le(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
};

// Sequential reader that reports the byte offset of any truncation.
struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
  std::string context;  // file path or label, used in error messages

  void need(std::size_t n) const {
    if (pos + n > bytes.size())
      throw std::runtime_error(context + ": truncated at byte offset " +
                               std::to_string(pos) + " (need " +
                               std::to_string(n) + " more bytes, have " +
                               std::to_string(bytes.size() - pos) + ")");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes[pos++];
    return v;
  }
  std::uint32_t u32le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[pos + i];
    pos += 4;
    return v;
  }
  std::uint64_t u64le() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[pos + i];
    pos += 8;
    return v;
  }
  std::int64_t i64le() { return static_cast<std::int64_t>(u64le()); }
  double f64le() { return std::bit_cast<double>(u64le()); }
  const std::uint8_t* raw(std::size_t n) {
    need(n);
    const std::uint8_t* p = bytes.data() + pos;
    pos += n;
    return p;
  }
  void expect_end() const {
    if (pos != bytes.size())
      throw std::runtime_error(context + ": " +
                               std::to_string(bytes.size() - pos) +
                               " unexpected trailing bytes at offset " +
                               std::to_string(pos));
  }
};

}  // namespace spikeiir::binio
