#include "kaclab/kernels.hpp"

#include "fftw_lock.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace kaclab {

namespace detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

using detail::fftw_planner_mutex;

Stencil8 lagrange_stencil(double pos, long last) {
  if (last < 7) throw std::invalid_argument("lagrange_stencil: need at least 8 nodes");
  Stencil8 s;
  s.start = static_cast<long>(std::floor(pos)) - 3;
  if (s.start + 7 > last) s.start = last - 7;
  for (int m = 0; m < 8; ++m) {
    double w = 1.0;
    const double xm = static_cast<double>(s.start + m);
    for (int l = 0; l < 8; ++l) {
      if (l == m) continue;
      const double xl = static_cast<double>(s.start + l);
      w *= (pos - xl) / (xm - xl);
    }
    s.w[m] = w;
  }
  return s;
}

QuarterRule::QuarterRule(std::size_t theta_nodes) {
  if (theta_nodes < 4 || theta_nodes % 4 != 0)
    throw std::invalid_argument("theta rule needs a positive multiple of 4 nodes");
  const std::size_t nq = theta_nodes / 4 + 1;
  cos.resize(nq);
  weight.resize(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    cos[q] = std::cos(two_pi * static_cast<double>(q) / static_cast<double>(theta_nodes));
    weight[q] = (q == 0 || q + 1 == nq ? 2.0 : 4.0) / static_cast<double>(theta_nodes);
  }
  cos[0] = 1.0;
  cos[nq - 1] = 0.0;
}

// ---------------------------------------------------------------------------

KineticRhs::KineticRhs(const std::vector<double>& a_fine, std::size_t fine_factor, std::size_t J,
                       double dk, const ModelParams& params, std::size_t theta_nodes,
                       std::size_t table_theta_nodes, int threads)
    : J_(J),
      dk_(dk),
      lambda_(params.lambda),
      mu_(params.mu),
      c_(params.loss_rate()),
      threads_(threads > 0 ? threads : omp_get_max_threads()),
      rule_(theta_nodes) {
  if (a_fine.size() != fine_factor * J + 1)
    throw std::invalid_argument("KineticRhs: fine table size mismatch");
  const std::size_t nq = rule_.size();
  const long last = static_cast<long>(J);
  const long fine_last = static_cast<long>(fine_factor * J);
  const double T = params.temperature;
  const double ff = static_cast<double>(fine_factor);
  stencil_.resize((J + 1) * nq);
  ac_.resize((J + 1) * nq);
  gs_.resize((J + 1) * nq);
  kaa_.assign(J + 1, 0.0);
  kag_.assign(J + 1, 0.0);
  const QuarterRule fine_rule(table_theta_nodes);
  const std::size_t nf = fine_rule.size();
  const auto nJ = static_cast<long long>(J + 1);
#pragma omp parallel num_threads(threads_)
  {
    std::vector<double> av(nf);
#pragma omp for schedule(static)
    for (long long jj = 0; jj < nJ; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      const double fj = static_cast<double>(j);
      const double k = fj * dk;
      for (std::size_t q = 0; q < nq; ++q) {
        const double cq = rule_.cos[q];
        stencil_[j * nq + q] = lagrange_stencil(fj * cq, last);
        ac_[j * nq + q] = apply_stencil(lagrange_stencil(fj * cq * ff, fine_last), a_fine.data());
        const double ks = k * rule_.sin(q);
        gs_[j * nq + q] = std::exp(-0.5 * T * ks * ks);
      }
      for (std::size_t q = 0; q < nf; ++q)
        av[q] = apply_stencil(lagrange_stencil(fj * fine_rule.cos[q] * ff, fine_last), a_fine.data());
      double saa = 0.0, sag = 0.0;
      for (std::size_t q = 0; q < nf; ++q) {
        const double ks = k * fine_rule.sin(q);
        saa += fine_rule.weight[q] * av[q] * av[nf - 1 - q];
        sag += fine_rule.weight[q] * av[q] * std::exp(-0.5 * T * ks * ks);
      }
      kaa_[j] = saa;
      kag_[j] = sag;
    }
  }
}

void KineticRhs::row(std::size_t j, double t, const double* eta, double* ec, double* out) const {
  const std::size_t nq = rule_.size();
  const Stencil8* st = &stencil_[j * nq];
  for (std::size_t q = 0; q < nq; ++q) ec[q] = apply_stencil(st[q], eta);
  const double e1 = std::exp(-c_ * t);
  const double gain_g = 4.0 * lambda_ + mu_;
  const double* ac = &ac_[j * nq];
  const double* gs = &gs_[j * nq];
  double s = 0.0;
  for (std::size_t q = 0; q < nq; ++q) {
    const double es = ec[nq - 1 - q];
    s += rule_.weight[q] *
         (gain_g * gs[q] * ec[q] + 4.0 * lambda_ * e1 * ac[q] * es + 2.0 * lambda_ * ec[q] * es);
  }
  out[j] = s + gain_g * e1 * kag_[j] + 2.0 * lambda_ * e1 * e1 * kaa_[j];
}

void KineticRhs::evaluate(double t, const std::vector<double>& eta, std::vector<double>& out) const {
  out.resize(J_ + 1);
  const auto n = static_cast<long long>(J_ + 1);
#pragma omp parallel num_threads(threads_)
  {
    std::vector<double> ec(rule_.size());
#pragma omp for schedule(static)
    for (long long j = 0; j < n; ++j) row(static_cast<std::size_t>(j), t, eta.data(), ec.data(), out.data());
  }
}

void KineticRhs::evaluate_serial(double t, const std::vector<double>& eta,
                                 std::vector<double>& out) const {
  out.resize(J_ + 1);
  std::vector<double> ec(rule_.size());
  for (std::size_t j = 0; j <= J_; ++j) row(j, t, eta.data(), ec.data(), out.data());
}

// ---------------------------------------------------------------------------

struct GridConvolver::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

GridConvolver::GridConvolver(const VelocityGrid& grid, std::size_t theta_nodes)
    : grid_(grid), rule_(theta_nodes), plans_(std::make_unique<Plans>()) {
  const std::size_t span = 2 * grid.size() - 1;
  fft_size_ = 1;
  while (fft_size_ < span) fft_size_ *= 2;
  const int n = static_cast<int>(fft_size_);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  double* real = fftw_alloc_real(fft_size_);
  fftw_complex* spec = fftw_alloc_complex(fft_size_ / 2 + 1);
  plans_->forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
  fftw_free(real);
  fftw_free(spec);
}

GridConvolver::~GridConvolver() = default;

std::vector<GridConvolver::Spectrum> GridConvolver::prepare(const std::vector<double>& masses) const {
  const std::size_t n = grid_.size();
  if (masses.size() != n) throw std::invalid_argument("GridConvolver: mass vector size mismatch");
  const std::size_t M = grid_.half_points;
  const std::size_t nc = fft_size_ / 2 + 1;
  std::vector<Spectrum> out(rule_.size());
  double* real = fftw_alloc_real(fft_size_);
  fftw_complex* spec = fftw_alloc_complex(nc);
  for (std::size_t q = 0; q < rule_.size(); ++q) {
    std::fill(real, real + fft_size_, 0.0);
    const double c = rule_.cos[q];
    for (std::size_t i = 0; i < n; ++i) {
      const double m = 0.5 * (masses[i] + masses[n - 1 - i]);
      if (m == 0.0) continue;
      const double p = static_cast<double>(M) + c * (static_cast<double>(i) - static_cast<double>(M));
      const auto i0 = static_cast<std::size_t>(std::floor(p));
      const double f = p - static_cast<double>(i0);
      real[i0] += (1.0 - f) * m;
      if (f > 0.0) real[i0 + 1] += f * m;
    }
    fftw_execute_dft_r2c(plans_->forward, real, spec);
    out[q].resize(nc);
    for (std::size_t k = 0; k < nc; ++k) out[q][k] = {spec[k][0], spec[k][1]};
  }
  fftw_free(real);
  fftw_free(spec);
  return out;
}

std::vector<double> GridConvolver::combine(const std::vector<Spectrum>& a,
                                           const std::vector<Spectrum>& b) const {
  const std::size_t nq = rule_.size();
  if (a.size() != nq || b.size() != nq) throw std::invalid_argument("GridConvolver: bad spectra");
  const std::size_t nc = fft_size_ / 2 + 1;
  fftw_complex* spec = fftw_alloc_complex(nc);
  double* real = fftw_alloc_real(fft_size_);
  for (std::size_t k = 0; k < nc; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t q = 0; q < nq; ++q) acc += rule_.weight[q] * a[q][k] * b[nq - 1 - q][k];
    spec[k][0] = acc.real();
    spec[k][1] = acc.imag();
  }
  fftw_execute_dft_c2r(plans_->backward, spec, real);
  const std::size_t n = grid_.size();
  const std::size_t M = grid_.half_points;
  const double scale = 1.0 / static_cast<double>(fft_size_);
  std::vector<double> out(n, 0.0);
  // linear convolution index s = i + j sits at s - M on the grid
  for (std::size_t s = 0; s + 1 < 2 * n; ++s) {
    const double m = std::max(0.0, real[s] * scale);
    if (s < M) out.front() += m;
    else if (s - M >= n) out.back() += m;
    else out[s - M] += m;
  }
  fftw_free(spec);
  fftw_free(real);
  return out;
}

std::vector<double> GridConvolver::apply(const std::vector<double>& m1,
                                         const std::vector<double>& m2) const {
  return combine(prepare(m1), prepare(m2));
}

}  // namespace kaclab
