// Reader for the IDX container used by the MNIST files: big-endian magic and
// dimension header followed by a flat u8 payload. Pixels are normalized to
// [0, 1] by dividing by 255.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikeiir/binio.hpp"
#include "spikeiir/dataset.hpp"

namespace spikeiir {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {
inline void check_magic(binio::Reader& r, std::uint32_t want,
                        const std::string& path) {
  const std::size_t at = r.pos;
  const std::uint32_t got = r.u32be();
  if (got != want)
    throw std::runtime_error(path + ": bad IDX magic at byte offset " +
                             std::to_string(at) + " (got 0x" +
                             [&] {
                               char buf[16];
                               std::snprintf(buf, sizeof buf, "%08x", got);
                               return std::string(buf);
                             }() +
                             ", want 0x" +
                             [&] {
                               char buf[16];
                               std::snprintf(buf, sizeof buf, "%08x", want);
                               return std::string(buf);
                             }() +
                             ")");
}
}  // namespace detail

// Loads an image/label file pair into samples with flat [0,1] pixel vectors
// (row-major within each image) and integer class labels.
inline std::vector<LabeledSample> load_mnist_idx(
    const std::string& images_path, const std::string& labels_path) {
  const std::vector<std::uint8_t> img_bytes = binio::read_file(images_path);
  binio::Reader img{img_bytes, 0, images_path};
  detail::check_magic(img, kIdxImagesMagic, images_path);
  const std::uint32_t n_images = img.u32be();
  const std::uint32_t rows = img.u32be();
  const std::uint32_t cols = img.u32be();
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::uint8_t* img_payload =
      img.raw(static_cast<std::size_t>(n_images) * pixels);

  const std::vector<std::uint8_t> lbl_bytes = binio::read_file(labels_path);
  binio::Reader lbl{lbl_bytes, 0, labels_path};
  detail::check_magic(lbl, kIdxLabelsMagic, labels_path);
  const std::uint32_t n_labels = lbl.u32be();
  if (n_labels != n_images)
    throw std::runtime_error("IDX count mismatch: " + images_path + " has " +
                             std::to_string(n_images) + " images but " +
                             labels_path + " has " + std::to_string(n_labels) +
                             " labels");
  const std::uint8_t* lbl_payload = lbl.raw(n_labels);

  std::vector<LabeledSample> samples;
  samples.reserve(n_images);
  for (std::uint32_t k = 0; k < n_images; ++k) {
    Eigen::VectorXd v(pixels);
    const std::uint8_t* px = img_payload + static_cast<std::size_t>(k) * pixels;
    for (std::size_t i = 0; i < pixels; ++i) v[i] = px[i] / 255.0;
    samples.push_back(LabeledSample{std::move(v), lbl_payload[k]});
  }
  return samples;
}

}  // namespace spikeiir
