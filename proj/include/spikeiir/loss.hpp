// Loss functions over the network's output trajectories, each returning the
// scalar loss together with its gradient w.r.t. every output value O[t, i].
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "spikeiir/filter.hpp"
#include "spikeiir/spike_tensor.hpp"

namespace spikeiir {

struct LossValue {
  double loss = 0.0;
  Eigen::MatrixXd d_output;  // n_out x T
};

// Softmax cross-entropy over per-channel spike counts. The count is a plain
// sum over time, so the per-step gradient is the same (p - y) row repeated
// at every t.
inline LossValue rate_loss(const Eigen::MatrixXd& output, int label) {
  const int n = static_cast<int>(output.rows());
  const int horizon = static_cast<int>(output.cols());
  if (label < 0 || label >= n)
    throw std::invalid_argument("rate_loss: label out of range");
  Eigen::VectorXd counts = output.rowwise().sum();
  const double shift = counts.maxCoeff();
  Eigen::VectorXd e = (counts.array() - shift).exp();
  const double z = e.sum();
  Eigen::VectorXd p = e / z;

  LossValue out;
  out.loss = std::log(z) - (counts[label] - shift);
  Eigen::VectorXd g = p;
  g[label] -= 1.0;
  out.d_output = g.replicate(1, horizon);
  return out;
}

// Filters a single train and accumulates squared trace difference; shared by
// the loss and the analysis-only distance.
namespace detail {
inline double filtered_sq_diff(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const FilterCoeffs& kernel,
                               Eigen::MatrixXd* residual) {
  double total = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    Eigen::ArrayXd diff = apply_filter(kernel, a.row(i).transpose()) -
                          apply_filter(kernel, b.row(i).transpose());
    total += (diff * diff).sum();
    if (residual) residual->row(i) = diff.transpose();
  }
  return total;
}
}  // namespace detail

// Squared distance between low-pass-filtered spike trains,
//   E = 1/(2T) sum_i sum_t (k*O - k*target)^2 .
// The gradient w.r.t. O is the filter adjoint applied to the residual: the
// trace adjoint u satisfies the same recursion run backward in time,
//   u[t] = res[t]/T + sum_p a_p u[t+p],   dE/dO[t] = g sum_q b_q u[t+q].
inline LossValue van_rossum_loss(const Eigen::MatrixXd& output,
                                 const Eigen::MatrixXd& target,
                                 const FilterCoeffs& kernel) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw std::invalid_argument("van_rossum_loss: shape mismatch");
  const int n = static_cast<int>(output.rows());
  const int horizon = static_cast<int>(output.cols());
  const int p_ord = kernel.order_p();
  const int q_ord = kernel.order_q();

  Eigen::MatrixXd residual(n, horizon);
  LossValue out;
  out.loss = detail::filtered_sq_diff(output, target, kernel, &residual) /
             (2.0 * horizon);

  out.d_output = Eigen::MatrixXd::Zero(n, horizon);
  Eigen::ArrayXd u(horizon);
  for (int i = 0; i < n; ++i) {
    for (int t = horizon - 1; t >= 0; --t) {
      double acc = residual(i, t) / horizon;
      for (int p = 1; p <= p_ord && t + p < horizon; ++p)
        acc += kernel.feedback[p - 1] * u[t + p];
      u[t] = acc;
    }
    for (int t = 0; t < horizon; ++t) {
      double acc = 0.0;
      for (int q = 0; q <= q_ord && t + q < horizon; ++q)
        acc += kernel.feedforward[q] * u[t + q];
      out.d_output(i, t) = kernel.gain * acc;
    }
  }
  return out;
}

inline double van_rossum_distance(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b,
                                  const FilterCoeffs& kernel) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("van_rossum_distance: shape mismatch");
  return detail::filtered_sq_diff(a, b, kernel, nullptr) / (2.0 * a.cols());
}

inline double van_rossum_distance(const SpikeTensor& a, const SpikeTensor& b,
                                  const FilterCoeffs& kernel) {
  return van_rossum_distance(a.to_matrix(), b.to_matrix(), kernel);
}

// Which loss drives training; the kernel is only used by van_rossum.
struct LossKind {
  enum class Kind { rate_cross_entropy, van_rossum };
  Kind kind = Kind::rate_cross_entropy;
  FilterCoeffs kernel;

  static LossKind rate() { return LossKind{Kind::rate_cross_entropy, {}}; }
  static LossKind distance(FilterCoeffs k) {
    validate_filter(k);
    return LossKind{Kind::van_rossum, std::move(k)};
  }
};

}  // namespace spikeiir
