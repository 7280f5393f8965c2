#include "kaclab/kinetic_solver.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>

#include "kaclab/csv.hpp"
#include "kaclab/errors.hpp"
#include "kaclab/kernels.hpp"
#include "fftw_lock.hpp"

namespace kaclab {

double second_moment_exact(double e0, const ModelParams& params, double t) {
  if (e0 < 0.0) throw std::invalid_argument("second_moment_exact: e0 must be nonnegative");
  const double d = std::exp(-0.5 * params.mu * t);
  return e0 * d + params.temperature * (1.0 - d);
}

VelocityGrid solver_grid(double e0, double radius, const ModelParams& params,
                         const SolverSettings& s) {
  VelocityGrid g;
  g.half_points = s.half_points;
  if (s.v_max > 0.0) {
    g.v_max = s.v_max;
  } else {
    g.v_max = 8.0 * std::max(std::sqrt(std::max(e0, 0.0)), std::sqrt(params.temperature));
    g.v_max = std::max(g.v_max, 1.5 * radius);
  }
  return g;
}

namespace {

constexpr std::size_t kFine = 8;

double support_radius(const Measure1D& m) {
  double r = 0.0;
  if (m.is_atoms()) {
    for (std::size_t i = 0; i < m.positions().size(); ++i)
      if (m.weights()[i] > 0.0) r = std::max(r, std::abs(m.positions()[i]));
  } else {
    const auto& g = m.velocity_grid();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (m.density()[i] > 0.0) r = std::max(r, std::abs(g.at(i)));
  }
  return r;
}

/// phi0(m dk_f), m = 0..count-1, for masses w at positions x.
std::vector<std::complex<double>> char_table(const std::vector<double>& x, const std::vector<double>& w,
                                             double dkf, std::size_t count, int threads) {
  std::vector<std::complex<double>> out(count);
  constexpr std::size_t chunk = 64;
  const auto nchunks = static_cast<long long>((count + chunk - 1) / chunk);
  std::vector<std::complex<double>> rot(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) rot[a] = std::polar(1.0, dkf * x[a]);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long cc = 0; cc < nchunks; ++cc) {
    const std::size_t m0 = static_cast<std::size_t>(cc) * chunk;
    const std::size_t m1 = std::min(count, m0 + chunk);
    for (std::size_t a = 0; a < x.size(); ++a) {
      if (w[a] == 0.0) continue;
      std::complex<double> z = std::polar(w[a], static_cast<double>(m0) * dkf * x[a]);
      for (std::size_t m = m0; m < m1; ++m) {
        out[m] += z;
        z *= rot[a];
      }
    }
  }
  return out;
}

struct FftwDct {
  fftw_plan plan = nullptr;
  double* in = nullptr;
  double* out = nullptr;
  explicit FftwDct(std::size_t n) {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_real(n);
    plan = fftw_plan_r2r_1d(static_cast<int>(n), in, out, FFTW_REDFT00, FFTW_ESTIMATE);
  }
  ~FftwDct() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwDct(const FftwDct&) = delete;
  FftwDct& operator=(const FftwDct&) = delete;
};

struct Reconstruction {
  std::vector<double> cont;  // continuous density on the grid, clipped and renormalized
  std::vector<double> cdf;   // cumulative trapezoid at grid nodes
  double clipped = 0.0;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;  // full measure
};

}  // namespace

KineticSolution solve(const Measure1D& f0, const ModelParams& params, double t_end,
                      const SolverSettings& settings) {
  params.validate();
  f0.validate();
  if (std::abs(f0.mass() - 1.0) > 1e-8) throw std::invalid_argument("solve: f0 must be a probability measure");
  if (!(t_end >= 0.0)) throw std::invalid_argument("solve: t_end must be nonnegative");
  for (double t : settings.output_times)
    if (t < 0.0 || t > t_end) throw std::invalid_argument("solve: output time outside [0, t_end]");
  if (settings.oversample < 1 || settings.half_points < 8)
    throw std::invalid_argument("solve: grid too small");

  const int threads = settings.serial ? 1 : (settings.threads > 0 ? settings.threads : omp_get_max_threads());
  const double e0 = f0.moment(2);
  const double T = params.temperature;
  const double c = params.loss_rate();

  KineticSolution sol;
  sol.params_ = params;
  sol.f0_ = f0;
  sol.loss_rate_ = c;
  sol.grid_ = solver_grid(e0, support_radius(f0), params, settings);
  const VelocityGrid& grid = sol.grid_;
  const std::size_t M = grid.half_points;
  const std::size_t n = grid.size();
  const std::size_t J = settings.oversample * M;
  const double dv = grid.dv();
  const double dk = M_PI / (static_cast<double>(settings.oversample) * grid.v_max);
  const double sigma = settings.mollifier_cells * dv;

  // initial characteristic function on the fine grid
  std::vector<double> src_x, src_w;
  if (f0.is_atoms()) {
    src_x = f0.positions();
    src_w = f0.weights();
  } else {
    const auto& g0 = f0.velocity_grid();
    for (std::size_t i = 0; i < g0.size(); ++i) {
      src_x.push_back(g0.at(i));
      src_w.push_back(f0.density()[i] * g0.weight(i));
    }
  }
  const std::size_t nfine = kFine * J + 1;
  const auto phi0_fine = char_table(src_x, src_w, dk / static_cast<double>(kFine), nfine, threads);
  std::vector<double> a_fine(nfine);
  for (std::size_t m = 0; m < nfine; ++m) {
    const double k = static_cast<double>(m) * dk / static_cast<double>(kFine);
    a_fine[m] = phi0_fine[m].real() - std::exp(-0.5 * T * k * k);
  }
  std::vector<std::complex<double>> phi0(J + 1);
  std::vector<double> ghat(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    phi0[j] = phi0_fine[j * kFine];
    const double k = static_cast<double>(j) * dk;
    ghat[j] = std::exp(-0.5 * T * k * k);
  }

  const KineticRhs rhs(a_fine, kFine, J, dk, params, settings.theta_nodes, settings.table_theta_nodes,
                       threads);
  auto eval = [&](double t, const std::vector<double>& eta, std::vector<double>& out) {
    if (settings.serial)
      rhs.evaluate_serial(t, eta, out);
    else
      rhs.evaluate(t, eta, out);
  };

  // knots: grid nodes and the breakpoints of f0
  std::vector<double> knots(n);
  for (std::size_t i = 0; i < n; ++i) knots[i] = grid.at(i);
  if (f0.is_atoms()) {
    knots.insert(knots.end(), f0.positions().begin(), f0.positions().end());
  } else if (!(f0.velocity_grid() == grid)) {
    for (std::size_t i = 0; i < f0.velocity_grid().size(); ++i) knots.push_back(f0.velocity_grid().at(i));
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  const std::size_t nk = knots.size();
  sol.knots_ = knots;
  sol.f0_left_.resize(nk);
  sol.f0_right_.resize(nk);
  if (f0.is_atoms()) {
    const Measure1D m = f0.merged();
    std::size_t a = 0;
    double s = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
      sol.f0_left_[k] = s;
      while (a < m.positions().size() && m.positions()[a] <= knots[k]) s += m.weights()[a++];
      sol.f0_right_[k] = s;
    }
  } else {
    for (std::size_t k = 0; k < nk; ++k) sol.f0_left_[k] = sol.f0_right_[k] = f0.cdf(knots[k]);
  }
  // knot position relative to grid nodes
  std::vector<std::size_t> knot_cell(nk);
  std::vector<double> knot_frac(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    double p = std::clamp((knots[k] + grid.v_max) / dv, 0.0, static_cast<double>(n - 1));
    std::size_t i = std::min(static_cast<std::size_t>(std::floor(p)), n - 2);
    knot_cell[k] = i;
    knot_frac[k] = p - static_cast<double>(i);
  }

  const double f0_m2 = e0;
  const double f0_m3 = f0.abs_moment(3.0);
  const double f0_m4 = f0.moment(4);

  FftwDct dct(J + 1);
  std::vector<double> gauss(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = grid.at(i);
    gauss[i] = std::exp(-v * v / (2.0 * T)) / std::sqrt(2.0 * M_PI * T);
  }
  std::vector<double> moll(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    const double k = static_cast<double>(j) * dk;
    moll[j] = std::exp(-0.5 * sigma * sigma * k * k);
  }

  auto reconstruct = [&](double t, const std::vector<double>& eta) {
    Reconstruction r;
    const double decay = std::exp(-c * t);
    for (std::size_t j = 0; j <= J; ++j) dct.in[j] = eta[j] * moll[j];
    fftw_execute(dct.plan);
    const double scale = dk / (2.0 * M_PI);
    r.cont.resize(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, m2eta = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i >= M ? i - M : M - i;
      const double v = grid.at(i);
      const double w = grid.weight(i);
      const double e = scale * dct.out[a];
      const double val = (1.0 - decay) * gauss[i] + e;
      const double v2 = v * v;
      m2 += w * v2 * val;
      m3 += w * v2 * std::abs(v) * val;
      m4 += w * v2 * v2 * val;
      m2eta += w * v2 * e;
      if (val < 0.0) r.clipped += -w * val;
      r.cont[i] = std::max(val, 0.0);
      mass += w * r.cont[i];
    }
    const double target = 1.0 - decay;
    if (mass > 0.0 && target > 0.0)
      for (double& x : r.cont) x *= target / mass;
    else
      std::fill(r.cont.begin(), r.cont.end(), 0.0);
    r.m2 = decay * f0_m2 + m2;
    r.m3 = decay * f0_m3 + m3;
    r.m4 = decay * f0_m4 + m4 - 6.0 * sigma * sigma * m2eta;
    r.cdf.resize(n);
    double s = 0.0;
    r.cdf[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      s += 0.5 * dv * (r.cont[i - 1] + r.cont[i]);
      r.cdf[i] = s;
    }
    return r;
  };
  auto knot_cdf = [&](const Reconstruction& r) {
    std::vector<double> out(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      const std::size_t i = knot_cell[k];
      out[k] = r.cdf[i] + knot_frac[k] * (r.cdf[i + 1] - r.cdf[i]);
    }
    return out;
  };

  std::vector<double> targets = settings.output_times;
  targets.push_back(t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  auto is_output = [&](double t) {
    return std::find(settings.output_times.begin(), settings.output_times.end(), t) !=
           settings.output_times.end();
  };

  std::vector<double> eta(J + 1, 0.0);
  std::vector<double> last_stored;
  auto record = [&](double t, bool force) {
    const Reconstruction r = reconstruct(t, eta);
    const double exact = second_moment_exact(e0, params, t);
    const double rel = std::abs(r.m2 - exact) / exact;
    auto& d = sol.diag_;
    d.max_m2_relative_error = std::max(d.max_m2_relative_error, rel);
    d.max_clipped_mass = std::max(d.max_clipped_mass, r.clipped);
    const double decay = std::exp(-c * t);
    double dev = 0.0;
    for (std::size_t j = 0; j <= J; ++j)
      dev = std::max(dev, std::abs(decay * (phi0[j] - ghat[j]) + eta[j]));
    d.sup_gamma_deviation = std::max(d.sup_gamma_deviation, dev);
    sol.moments_.push_back({t, r.m2, r.m3, r.m4});
    if (rel > settings.moment_tolerance)
      throw NumericalAbort("kinetic solver: second moment drift " + format_number(rel) + " at t=" +
                           format_number(t) + " (solver " + format_number(r.m2) + ", exact " +
                           format_number(exact) + ")");
    auto kc = knot_cdf(r);
    double moved = last_stored.empty() ? 1.0 : 0.0;
    for (std::size_t k = 0; k < nk && !last_stored.empty(); ++k)
      moved = std::max(moved, std::abs(kc[k] - last_stored[k]));
    if (force || moved >= settings.slice_tolerance) {
      sol.slice_times_.push_back(t);
      sol.slice_cdf_.push_back(kc);
      last_stored = std::move(kc);
    }
    if (is_output(t)) {
      OutputSlice o;
      o.t = t;
      o.phi.dk = dk;
      o.phi.phi.resize(J + 1);
      for (std::size_t j = 0; j <= J; ++j) o.phi.phi[j] = decay * phi0[j] + (1.0 - decay) * ghat[j] + eta[j];
      o.continuous = Measure1D::grid(grid, r.cont);
      o.atom_mass = decay;
      o.clipped_mass = r.clipped;
      sol.outputs_.push_back(std::move(o));
    }
  };

  const double dt_target = settings.dt > 0.0 ? settings.dt : 0.05 / c;
  std::vector<double> k1, k2, k3, k4, tmp(J + 1);
  double t = 0.0;
  record(0.0, true);
  for (double target : targets) {
    if (target <= t) continue;
    const auto steps = static_cast<std::size_t>(std::ceil((target - t) / dt_target - 1e-9));
    const double h = (target - t) / static_cast<double>(steps);
    const double eh = std::exp(-c * h), eh2 = std::exp(-0.5 * c * h);
    const double t_start = t;
    for (std::size_t s = 0; s < steps; ++s) {
      const double t0 = t_start + static_cast<double>(s) * h;
      eval(t0, eta, k1);
      for (std::size_t j = 0; j <= J; ++j) tmp[j] = eh2 * (eta[j] + 0.5 * h * k1[j]);
      eval(t0 + 0.5 * h, tmp, k2);
      for (std::size_t j = 0; j <= J; ++j) tmp[j] = eh2 * eta[j] + 0.5 * h * k2[j];
      eval(t0 + 0.5 * h, tmp, k3);
      for (std::size_t j = 0; j <= J; ++j) tmp[j] = eh * eta[j] + h * eh2 * k3[j];
      eval(t0 + h, tmp, k4);
      for (std::size_t j = 0; j <= J; ++j)
        eta[j] = eh * eta[j] + h / 6.0 * (eh * k1[j] + 2.0 * eh2 * (k2[j] + k3[j]) + k4[j]);
      const bool last = s + 1 == steps;
      t = last ? target : t0 + h;
      ++sol.diag_.steps;
      record(t, last);
    }
  }
  sol.diag_.slices = sol.slice_times_.size();
  return sol;
}

// ---------------------------------------------------------------------------

void KineticSolution::check_time(double t) const {
  const double tol = 1e-12 * std::max(1.0, horizon());
  if (!(t >= -tol && t <= horizon() + tol))
    throw std::out_of_range("kinetic solution: t=" + format_number(t) + " outside [0, " +
                            format_number(horizon()) + "]");
}

KineticSolution::Mix KineticSolution::mix(double t) const {
  check_time(t);
  t = std::clamp(t, 0.0, horizon());
  Mix m;
  m.atom_weight = std::exp(-loss_rate_ * t);
  auto it = std::upper_bound(slice_times_.begin(), slice_times_.end(), t);
  if (it == slice_times_.end()) {
    m.lo = m.hi = &slice_cdf_.back();
    m.w = 0.0;
    return m;
  }
  const std::size_t b = static_cast<std::size_t>(it - slice_times_.begin());
  const std::size_t a = b - 1;
  m.lo = &slice_cdf_[a];
  m.hi = &slice_cdf_[b];
  m.w = (t - slice_times_[a]) / (slice_times_[b] - slice_times_[a]);
  return m;
}

double KineticSolution::left(const Mix& m, std::size_t a) const {
  return (1.0 - m.w) * (*m.lo)[a] + m.w * (*m.hi)[a] + m.atom_weight * f0_left_[a];
}

double KineticSolution::right(const Mix& m, std::size_t a) const {
  return (1.0 - m.w) * (*m.lo)[a] + m.w * (*m.hi)[a] + m.atom_weight * f0_right_[a];
}

double KineticSolution::quantile(double t, double u) const {
  const Mix m = mix(t);
  const std::size_t nk = knots_.size();
  const double target = u * right(m, nk - 1);
  std::size_t lo = 0, hi = nk - 1;
  if (right(m, 0) >= target) return knots_[0];
  // smallest a with right(a) >= target
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (right(m, mid) >= target) hi = mid;
    else lo = mid;
  }
  const double fl = left(m, hi);
  const double fr_prev = right(m, hi - 1);
  if (fl >= target && fl > fr_prev)
    return knots_[hi - 1] + (target - fr_prev) / (fl - fr_prev) * (knots_[hi] - knots_[hi - 1]);
  return knots_[hi];
}

QuantileFn KineticSolution::quantile_fn(double t) const {
  const Mix m = mix(t);
  const std::size_t nk = knots_.size();
  std::vector<double> fl(nk), fr(nk);
  for (std::size_t a = 0; a < nk; ++a) {
    fl[a] = left(m, a);
    fr[a] = right(m, a);
  }
  return QuantileFn::from_knots(knots_, fl, fr);
}

double KineticSolution::cdf(double t, double v) const {
  const Mix m = mix(t);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
  if (it == knots_.begin()) return 0.0;
  const std::size_t a = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (knots_[a] == v || a + 1 == knots_.size()) return right(m, a);
  const double s = (v - knots_[a]) / (knots_[a + 1] - knots_[a]);
  return right(m, a) + s * (left(m, a + 1) - right(m, a));
}

const OutputSlice& KineticSolution::output_at(double t) const {
  for (const auto& o : outputs_)
    if (std::abs(o.t - t) <= 1e-12 * std::max(1.0, t)) return o;
  throw std::out_of_range("kinetic solution: no output slice at t=" + format_number(t));
}

double KineticSolution::moment(double t, int r) const {
  check_time(t);
  if (r < 2 || r > 4) throw std::invalid_argument("KineticSolution::moment: r must be 2, 3 or 4");
  auto pick = [r](const MomentSample& s) { return r == 2 ? s.m2 : (r == 3 ? s.m3 : s.m4); };
  auto it = std::lower_bound(moments_.begin(), moments_.end(), t,
                             [](const MomentSample& s, double x) { return s.t < x; });
  if (it == moments_.end()) return pick(moments_.back());
  if (it == moments_.begin() || it->t == t) return pick(*it);
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return (1.0 - w) * pick(a) + w * pick(b);
}

void KineticSolution::write_density_csv(std::ostream& out) const {
  CsvWriter w(out, {"t", "v", "density"});
  for (const auto& o : outputs_) {
    const auto& g = o.continuous.velocity_grid();
    for (std::size_t i = 0; i < g.size(); ++i) w.row({o.t, g.at(i), o.continuous.density()[i]});
  }
}

void KineticSolution::write_moment_csv(std::ostream& out) const {
  CsvWriter w(out, {"t", "moment2", "moment4"});
  for (const auto& o : outputs_) w.row({o.t, moment(o.t, 2), moment(o.t, 4)});
}

double kinetic_w2(const QuantileSource& a, const QuantileSource& b, double t) {
  if (t > a.horizon() || t > b.horizon() || t < 0.0)
    throw std::out_of_range("kinetic_w2: t outside a solution horizon");
  return w2_squared(a.quantile_fn(t), b.quantile_fn(t));
}

// ---------------------------------------------------------------------------

double abs_cos_moment(double r) {
  return std::exp(std::lgamma(0.5 * (r + 1.0)) - std::lgamma(0.5 * r + 1.0)) / std::sqrt(M_PI);
}

double gaussian_abs_moment(double r, double temperature) {
  return std::pow(2.0 * temperature, 0.5 * r) * std::exp(std::lgamma(0.5 * (r + 1.0))) / std::sqrt(M_PI);
}

namespace {

MomentBound bound_constants(double r, const ModelParams& params, double e0) {
  if (!(r > 2.0)) throw std::invalid_argument("moment_bound: r must exceed 2 (use second_moment_exact)");
  params.validate();
  MomentBound b;
  b.r = r;
  b.kappa = abs_cos_moment(r);
  b.c_r = std::pow(2.0, std::max(0.5 * r, 1.0)) * b.kappa;
  const double lam = params.lambda, mu = params.mu, T = params.temperature;
  b.c1 = 2.0 * lam * (1.0 - 2.0 * b.kappa) + mu * (1.0 - b.kappa);
  if (!(b.c1 > 0.0)) throw std::domain_error("moment_bound: C1 must be positive");
  // <|cos| |sin|^{r-1}>
  const double beta = 2.0 / (M_PI * r);
  const double s_bar = std::sqrt(std::max(T, e0));
  const double p = std::pow(2.0, r - 1.0);
  b.c2 = mu * b.kappa * gaussian_abs_moment(r, T) + mu * p * beta * s_bar * gaussian_abs_moment(r - 1.0, T);
  b.c3 = 2.0 * lam * 2.0 * p * beta * s_bar + mu * p * beta * gaussian_abs_moment(1.0, T);
  return b;
}

}  // namespace

std::vector<double> moment_envelope(double r, double m0, const ModelParams& params, double e0,
                                    const std::vector<double>& times) {
  const MomentBound b = bound_constants(r, params, e0);
  if (!(m0 >= 0.0)) throw std::invalid_argument("moment_bound: m0 must be nonnegative");
  const double ex = 1.0 - 1.0 / r;
  auto f = [&](double y) { return -b.c1 * y + b.c2 + b.c3 * std::pow(std::max(y, 0.0), ex); };
  std::vector<double> out;
  out.reserve(times.size());
  double t = 0.0, y = m0;
  const double h_max = 1e-3;
  for (double target : times) {
    if (target < t) throw std::invalid_argument("moment_envelope: times must be nondecreasing");
    while (t < target) {
      const double h = std::min(h_max, target - t);
      const double a1 = f(y), a2 = f(y + 0.5 * h * a1), a3 = f(y + 0.5 * h * a2), a4 = f(y + h * a3);
      y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      t += h;
    }
    t = target;
    out.push_back(y);
  }
  return out;
}

MomentBound moment_bound(double r, double m0, const ModelParams& params, double t, double e0) {
  MomentBound b = bound_constants(r, params, e0);
  b.envelope = moment_envelope(r, m0, params, e0, {t}).front();
  return b;
}

}  // namespace kaclab
