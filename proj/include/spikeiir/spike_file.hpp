// On-disk container for a single spike train: small header plus the binary
// grid packed eight steps to a byte (time-major scan, LSB first).
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikeiir/binio.hpp"
#include "spikeiir/spike_tensor.hpp"

namespace spikeiir {

inline constexpr char kSpikeFileMagic[4] = {'S', 'P', 'K', 'T'};
inline constexpr std::uint32_t kSpikeFileVersion = 1;

inline std::vector<std::uint8_t> spike_file_bytes(const SpikeTensor& spikes) {
  binio::Writer w;
  w.raw(kSpikeFileMagic, sizeof kSpikeFileMagic);
  w.u32le(kSpikeFileVersion);
  w.u32le(static_cast<std::uint32_t>(spikes.horizon()));
  w.u32le(static_cast<std::uint32_t>(spikes.channels()));
  const std::size_t n_cells =
      static_cast<std::size_t>(spikes.horizon()) * spikes.channels();
  std::uint8_t acc = 0;
  int filled = 0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    if (spikes.raw()[i]) acc |= static_cast<std::uint8_t>(1u << filled);
    if (++filled == 8) {
      w.u8(acc);
      acc = 0;
      filled = 0;
    }
  }
  if (filled > 0) w.u8(acc);
  return std::move(w.bytes);
}

inline void save_spikes(const SpikeTensor& spikes, const std::string& path) {
  binio::write_file(path, spike_file_bytes(spikes));
}

inline SpikeTensor load_spikes(const std::string& path) {
  const std::vector<std::uint8_t> bytes = binio::read_file(path);
  binio::Reader r{bytes, 0, path};
  const std::uint8_t* magic = r.raw(sizeof kSpikeFileMagic);
  for (std::size_t i = 0; i < sizeof kSpikeFileMagic; ++i)
    if (magic[i] != static_cast<std::uint8_t>(kSpikeFileMagic[i]))
      throw std::runtime_error(path + ": not a spike file (bad magic)");
  const std::uint32_t version = r.u32le();
  if (version != kSpikeFileVersion)
    throw std::runtime_error(path + ": unsupported spike file version " +
                             std::to_string(version));
  const std::uint32_t horizon = r.u32le();
  const std::uint32_t channels = r.u32le();
  const std::size_t n_cells = static_cast<std::size_t>(horizon) * channels;
  const std::uint8_t* packed = r.raw((n_cells + 7) / 8);
  r.expect_end();

  SpikeTensor out(static_cast<int>(horizon), static_cast<int>(channels));
  for (std::size_t i = 0; i < n_cells; ++i)
    out.raw()[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return out;
}

}  // namespace spikeiir
