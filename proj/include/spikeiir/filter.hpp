// Synapse filter channels as linear constant-coefficient difference
// equations. A channel with feedback order P and feed-forward order Q
// evolves as
//
//   F[t] = sum_{p=1..P} feedback[p-1] * F[t-p]
//        + gain * sum_{q=0..Q} feedforward[q] * in[t-q]
//
// with all state at t < 0 defined as zero. Named constructors realize the
// dual-exponential, alpha-synapse and plain pass-through (simple LIF)
// kernels; arbitrary stable (P, Q) filters are accepted via make_filter.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace spikeiir {

struct FilterCoeffs {
  Eigen::VectorXd feedback;     // alpha_1 .. alpha_P
  Eigen::VectorXd feedforward;  // beta_0 .. beta_Q
  bool trainable = false;
  double gain = 1.0;

  int order_p() const { return static_cast<int>(feedback.size()); }
  int order_q() const { return static_cast<int>(feedforward.size()) - 1; }
};

// Poles of the recursion, i.e. roots of z^P - a_1 z^(P-1) - ... - a_P,
// computed as companion-matrix eigenvalues.
inline std::vector<std::complex<double>> filter_poles(const FilterCoeffs& c) {
  const int p = c.order_p();
  std::vector<std::complex<double>> poles;
  if (p == 0) return poles;
  if (p == 1) {
    poles.emplace_back(c.feedback[0], 0.0);
    return poles;
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  companion.row(0) = c.feedback.transpose();
  companion.block(1, 0, p - 1, p - 1).diagonal().setOnes();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  poles.reserve(p);
  for (int k = 0; k < p; ++k) poles.push_back(solver.eigenvalues()[k]);
  return poles;
}

inline double max_pole_modulus(const FilterCoeffs& c) {
  double m = 0.0;
  for (const auto& z : filter_poles(c)) m = std::max(m, std::abs(z));
  return m;
}

inline bool is_stable(const FilterCoeffs& c) {
  return max_pole_modulus(c) < 1.0;
}

// Radial pole rescaling: if any pole modulus reaches `threshold`, shrink all
// poles by a common factor so the largest lands at `target`. Scaling pole
// radii by s is exactly feedback[p-1] *= s^p. Returns true when a rescale
// happened.
inline bool clamp_poles(FilterCoeffs& c, double threshold = 1.0 - 1e-6,
                        double target = 0.999) {
  const double m = max_pole_modulus(c);
  if (m < threshold) return false;
  const double s = target / m;
  double sp = 1.0;
  for (int p = 0; p < c.order_p(); ++p) {
    sp *= s;
    c.feedback[p] *= sp;
  }
  return true;
}

inline void validate_filter(const FilterCoeffs& c) {
  if (c.feedforward.size() < 1)
    throw std::invalid_argument("filter: feedforward must have at least one tap");
  if (!c.feedback.allFinite() || !c.feedforward.allFinite() ||
      !std::isfinite(c.gain))
    throw std::invalid_argument("filter: coefficients must be finite");
  if (!is_stable(c))
    throw std::invalid_argument("filter: unstable (pole modulus >= 1)");
}

inline FilterCoeffs make_filter(Eigen::VectorXd feedback,
                                Eigen::VectorXd feedforward,
                                bool trainable = false, double gain = 1.0) {
  FilterCoeffs c{std::move(feedback), std::move(feedforward), trainable, gain};
  validate_filter(c);
  return c;
}

// Dual-exponential kernel: second-order filter with poles e^(-1/tau_m) and
// e^(-1/tau_s) whose unit-impulse response is e^(-n/tau_m) - e^(-n/tau_s).
inline FilterCoeffs dual_exp_coeffs(double tau_m, double tau_s,
                                    bool trainable = false) {
  if (!(tau_m > 0.0) || !(tau_s > 0.0))
    throw std::invalid_argument("dual_exp_coeffs: time constants must be > 0");
  if (tau_m == tau_s)
    throw std::invalid_argument(
        "dual_exp_coeffs: tau_m == tau_s gives a degenerate (identically zero) kernel");
  const double em = std::exp(-1.0 / tau_m);
  const double es = std::exp(-1.0 / tau_s);
  Eigen::VectorXd fb(2), ff(2);
  fb << em + es, -std::exp(-(tau_m + tau_s) / (tau_m * tau_s));
  ff << 0.0, em - es;
  return FilterCoeffs{std::move(fb), std::move(ff), trainable, 1.0};
}

// Alpha synapse: repeated pole at e^(-1/tau), impulse response (n/tau)e^(-n/tau).
inline FilterCoeffs alpha_synapse_coeffs(double tau, bool trainable = false) {
  if (!(tau > 0.0))
    throw std::invalid_argument("alpha_synapse_coeffs: tau must be > 0");
  const double e = std::exp(-1.0 / tau);
  Eigen::VectorXd fb(2), ff(2);
  fb << 2.0 * e, -std::exp(-2.0 / tau);
  ff << 0.0, e / tau;
  return FilterCoeffs{std::move(fb), std::move(ff), trainable, 1.0};
}

// Pass-through: no synapse dynamics, the trace equals the input spike train.
inline FilterCoeffs simple_lif_coeffs(bool trainable = false) {
  Eigen::VectorXd fb(0), ff(1);
  ff << 1.0;
  return FilterCoeffs{std::move(fb), std::move(ff), trainable, 1.0};
}

// One step of the recursion as a pure function. trace_hist[k] holds
// F[t-1-k] (k < P); input_hist[k] holds in[t-k] (k <= Q). Histories are
// zero-padded by the caller for indices before t = 0.
inline double filter_step(const FilterCoeffs& c,
                          std::span<const double> trace_hist,
                          std::span<const double> input_hist) {
  double acc = 0.0;
  for (int p = 0; p < c.order_p(); ++p) acc += c.feedback[p] * trace_hist[p];
  double drive = 0.0;
  for (int q = 0; q <= c.order_q(); ++q) drive += c.feedforward[q] * input_hist[q];
  return acc + c.gain * drive;
}

// Runs the filter over a whole sequence with quiescent initial state.
inline Eigen::ArrayXd apply_filter(const FilterCoeffs& c,
                                   const Eigen::Ref<const Eigen::ArrayXd>& input) {
  const int horizon = static_cast<int>(input.size());
  const int p_ord = c.order_p();
  const int q_ord = c.order_q();
  Eigen::ArrayXd out(horizon);
  for (int t = 0; t < horizon; ++t) {
    double acc = 0.0;
    for (int p = 1; p <= p_ord && p <= t; ++p)
      acc += c.feedback[p - 1] * out[t - p];
    double drive = 0.0;
    for (int q = 0; q <= q_ord && q <= t; ++q)
      drive += c.feedforward[q] * input[t - q];
    out[t] = acc + c.gain * drive;
  }
  return out;
}

// Response to a unit impulse at t = 0, length n_steps.
inline Eigen::ArrayXd impulse_response(const FilterCoeffs& c, int n_steps) {
  Eigen::ArrayXd impulse = Eigen::ArrayXd::Zero(n_steps);
  if (n_steps > 0) impulse[0] = 1.0;
  return apply_filter(c, impulse);
}

}  // namespace spikeiir
