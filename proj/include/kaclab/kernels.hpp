#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "kaclab/measure.hpp"
#include "kaclab/model.hpp"

namespace kaclab {

/// 8-point Lagrange stencil on an even function sampled at 0..last; negative
/// node indices are mirrored.
struct Stencil8 {
  long start = 0;
  double w[8] = {};
};

Stencil8 lagrange_stencil(double pos, long last);

inline double apply_stencil(const Stencil8& s, const double* f) {
  double acc = 0.0;
  for (int m = 0; m < 8; ++m) {
    const long i = s.start + m;
    acc += s.w[m] * f[i < 0 ? -i : i];
  }
  return acc;
}

/// Quarter-period reduction of a uniform theta rule with `theta_nodes` points
/// (a multiple of 4) for integrands even in cos and in sin: nodes
/// theta_q = 2 pi q / theta_nodes, q = 0..theta_nodes/4, with cos exactly 0 at
/// the last node and sin(theta_q) = cos(theta_{last - q}).
struct QuarterRule {
  std::vector<double> cos;
  std::vector<double> weight;

  explicit QuarterRule(std::size_t theta_nodes);
  std::size_t size() const { return cos.size(); }
  double sin(std::size_t q) const { return cos[cos.size() - 1 - q]; }
};

/// Nonlinear part N(t, eta) of the perturbation equation
///   eta' = -(2 lambda + mu) eta + N(t, eta)
/// on the frequency grid k_j = j dk, j = 0..J, where
///   phi = e^{-ct} Re phi0 + (1 - e^{-ct}) gamma_hat + eta + (odd part).
class KineticRhs {
 public:
  /// a_fine: Re phi0 - gamma_hat on k = m dk / fine_factor, m = 0..fine_factor J.
  KineticRhs(const std::vector<double>& a_fine, std::size_t fine_factor, std::size_t J, double dk,
             const ModelParams& params, std::size_t theta_nodes, std::size_t table_theta_nodes,
             int threads);

  std::size_t size() const { return J_ + 1; }
  void evaluate(double t, const std::vector<double>& eta, std::vector<double>& out) const;
  /// Reference loop, same arithmetic order per frequency.
  void evaluate_serial(double t, const std::vector<double>& eta, std::vector<double>& out) const;

  const std::vector<double>& source_aa() const { return kaa_; }
  const std::vector<double>& source_ag() const { return kag_; }

 private:
  std::size_t J_;
  double dk_;
  double lambda_, mu_;
  double c_;
  int threads_;
  QuarterRule rule_;
  std::vector<Stencil8> stencil_;  // (J+1) x nq
  std::vector<double> ac_;         // A(k_j cos_q)
  std::vector<double> gs_;         // gamma_hat(k_j sin_q)
  std::vector<double> kaa_, kag_;

  void row(std::size_t j, double t, const double* eta, double* ec, double* out) const;
};

/// B[nu1, nu2] for symmetric-reduced node masses on one VelocityGrid, via
/// per-node CIC deposits of the scaled measures and FFT convolution.
class GridConvolver {
 public:
  GridConvolver(const VelocityGrid& grid, std::size_t theta_nodes);
  ~GridConvolver();
  GridConvolver(const GridConvolver&) = delete;
  GridConvolver& operator=(const GridConvolver&) = delete;

  using Spectrum = std::vector<std::complex<double>>;
  /// Transforms of the symmetrized masses scaled by cos(theta_q), one per node.
  std::vector<Spectrum> prepare(const std::vector<double>& masses) const;
  /// Node masses of B from prepared inputs. Overflow beyond the grid ends is
  /// folded into the end nodes. Safe to call concurrently.
  std::vector<double> combine(const std::vector<Spectrum>& a, const std::vector<Spectrum>& b) const;
  std::vector<double> apply(const std::vector<double>& m1, const std::vector<double>& m2) const;

  const VelocityGrid& grid() const { return grid_; }

 private:
  VelocityGrid grid_;
  QuarterRule rule_;
  std::size_t fft_size_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace kaclab
