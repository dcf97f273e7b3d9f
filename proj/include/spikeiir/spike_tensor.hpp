// Dense binary spike data over a fixed horizon, indexed (time, channel).
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace spikeiir {

class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(int horizon, int channels)
      : horizon_(horizon),
        channels_(channels),
        data_(static_cast<size_t>(horizon) * channels, 0) {
    if (horizon < 0 || channels < 0)
      throw std::invalid_argument("SpikeTensor: negative shape");
  }

  int horizon() const { return horizon_; }
  int channels() const { return channels_; }

  bool at(int t, int c) const { return data_[index(t, c)] != 0; }
  void set(int t, int c, bool v) { data_[index(t, c)] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : data_) n += b;
    return n;
  }

  const std::vector<std::uint8_t>& raw() const { return data_; }
  std::vector<std::uint8_t>& raw() { return data_; }

  bool operator==(const SpikeTensor& o) const {
    return horizon_ == o.horizon_ && channels_ == o.channels_ &&
           data_ == o.data_;
  }

  // (channels x horizon) real view; column t is the spike vector at step t.
  Eigen::MatrixXd to_matrix() const {
    Eigen::MatrixXd m(channels_, horizon_);
    for (int t = 0; t < horizon_; ++t)
      for (int c = 0; c < channels_; ++c) m(c, t) = at(t, c) ? 1.0 : 0.0;
    return m;
  }

  static SpikeTensor from_matrix(const Eigen::MatrixXd& m) {
    SpikeTensor out(static_cast<int>(m.cols()), static_cast<int>(m.rows()));
    for (int t = 0; t < out.horizon_; ++t)
      for (int c = 0; c < out.channels_; ++c) {
        const double v = m(c, t);
        if (v != 0.0 && v != 1.0)
          throw std::invalid_argument("SpikeTensor: entries must be 0 or 1");
        out.set(t, c, v == 1.0);
      }
    return out;
  }

 private:
  std::size_t index(int t, int c) const {
    return static_cast<std::size_t>(t) * channels_ + c;
  }

  int horizon_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace spikeiir
