#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "kaclab/measure.hpp"
#include "kaclab/model.hpp"

namespace kaclab {

/// Time-indexed family of one-particle laws that can be queried by rank.
class QuantileSource {
 public:
  virtual ~QuantileSource() = default;
  virtual double horizon() const = 0;
  virtual double quantile(double t, double u) const = 0;
  virtual QuantileFn quantile_fn(double t) const = 0;
};

/// The same law at every time.
class StaticQuantile final : public QuantileSource {
 public:
  explicit StaticQuantile(QuantileFn q) : q_(std::move(q)) {}
  double horizon() const override { return std::numeric_limits<double>::infinity(); }
  double quantile(double, double u) const override { return q_(u); }
  QuantileFn quantile_fn(double) const override { return q_; }

 private:
  QuantileFn q_;
};

/// Characteristic function on k_j = j dk, j = 0..J. Negative frequencies
/// follow from phi(-k) = conj(phi(k)).
struct CharGrid {
  double dk = 0.0;
  std::vector<std::complex<double>> phi;

  std::size_t size() const { return phi.size(); }
  double k(long j) const { return static_cast<double>(j) * dk; }
  std::complex<double> at(long j) const {
    return j >= 0 ? phi[static_cast<std::size_t>(j)] : std::conj(phi[static_cast<std::size_t>(-j)]);
  }
};

struct SolverSettings {
  /// 0 picks 8 max(sqrt(e0), sqrt(T)), widened to 1.5 times the support of f0.
  double v_max = 0.0;
  std::size_t half_points = 2048;
  /// Frequency grid oversampling: dk = pi / (oversample v_max).
  std::size_t oversample = 2;
  /// Uniform theta rule on [0, 2pi); must be a multiple of 4.
  std::size_t theta_nodes = 64;
  /// Theta rule for the time-independent source tables.
  std::size_t table_theta_nodes = 4096;
  /// 0 picks 0.05 / (2 lambda + mu).
  double dt = 0.0;
  /// Gaussian mollifier width in units of dv applied before the inverse transform.
  double mollifier_cells = 2.0;
  /// Relative second-moment drift that aborts the run.
  double moment_tolerance = 1e-3;
  /// A quantile slice is stored once the CDF moved this much in sup norm.
  double slice_tolerance = 1e-5;
  /// Times at which densities and characteristic functions are kept.
  std::vector<double> output_times;
  int threads = 0;
  /// Use the serial reference kernel.
  bool serial = false;
};

/// Grid the solver would use for an initial law with second moment e0 and
/// support radius `radius`.
VelocityGrid solver_grid(double e0, double radius, const ModelParams& params,
                         const SolverSettings& settings);

struct OutputSlice {
  double t = 0.0;
  CharGrid phi;
  /// Absolutely continuous part on the velocity grid. The remaining mass
  /// e^{-(2 lambda + mu) t} sits on the initial measure.
  Measure1D continuous;
  double atom_mass = 0.0;
  double clipped_mass = 0.0;
};

struct MomentSample {
  double t;
  double m2;
  double m3;
  double m4;
};

struct SolverDiagnostics {
  double max_clipped_mass = 0.0;
  double sup_gamma_deviation = 0.0;
  double max_m2_relative_error = 0.0;
  std::size_t steps = 0;
  std::size_t slices = 0;
};

/// Numerical solution of the thermostated Boltzmann-Kac equation.
/// Immutable after construction; safe for concurrent readers.
class KineticSolution final : public QuantileSource {
 public:
  const ModelParams& params() const { return params_; }
  const VelocityGrid& grid() const { return grid_; }
  const Measure1D& initial() const { return f0_; }
  double horizon() const override { return slice_times_.back(); }

  double quantile(double t, double u) const override;
  QuantileFn quantile_fn(double t) const override;
  /// CDF of f_t at v.
  double cdf(double t, double v) const;

  const std::vector<OutputSlice>& outputs() const { return outputs_; }
  const OutputSlice& output_at(double t) const;
  const std::vector<MomentSample>& moments() const { return moments_; }
  /// Moments linearly interpolated between steps; r in {2, 3, 4}.
  double moment(double t, int r) const;
  const SolverDiagnostics& diagnostics() const { return diag_; }
  const std::vector<double>& slice_times() const { return slice_times_; }

  /// CSV `t,v,density` for the continuous parts of all outputs.
  void write_density_csv(std::ostream& out) const;
  /// CSV `t,moment2,moment4`.
  void write_moment_csv(std::ostream& out) const;

 private:
  friend KineticSolution solve(const Measure1D&, const ModelParams&, double, const SolverSettings&);

  ModelParams params_;
  VelocityGrid grid_;
  Measure1D f0_;
  double loss_rate_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> f0_left_, f0_right_;
  std::vector<double> slice_times_;
  /// Continuous part CDF at the knots, one row per slice.
  std::vector<std::vector<double>> slice_cdf_;
  std::vector<OutputSlice> outputs_;
  std::vector<MomentSample> moments_;
  SolverDiagnostics diag_;

  void check_time(double t) const;
  /// Continuous CDF at knot a for time t from the bracketing slices.
  struct Mix {
    const std::vector<double>* lo;
    const std::vector<double>* hi;
    double w;
    double atom_weight;
  };
  Mix mix(double t) const;
  double left(const Mix& m, std::size_t a) const;
  double right(const Mix& m, std::size_t a) const;
};

/// Integrates the kinetic equation from f0 up to t_end.
/// Throws NumericalAbort if the second moment drifts beyond
/// settings.moment_tolerance relative to the exact law.
KineticSolution solve(const Measure1D& f0, const ModelParams& params, double t_end,
                      const SolverSettings& settings = {});

/// e0 e^{-mu t/2} + T (1 - e^{-mu t/2}).
double second_moment_exact(double e0, const ModelParams& params, double t);

/// Law of X cos(theta) + Y sin(theta), scaled by the two masses, with theta on
/// a uniform rule of `theta_nodes` points. Atoms x atoms stays atomic (no
/// merging, so outputs line up entry by entry); anything involving a grid is
/// returned on that grid. Grid inputs must share one grid and need
/// theta_nodes divisible by 4.
Measure1D b_operator(const Measure1D& nu1, const Measure1D& nu2, std::size_t theta_nodes = 64);

struct WildSettings {
  std::size_t n_max = 40;
  /// Uniform time intervals on [0, t].
  std::size_t time_intervals = 20;
  std::size_t theta_nodes = 64;
  int threads = 0;
};

struct WildResult {
  /// u^{n_max}_t as a grid measure (not renormalized).
  Measure1D measure;
  double mass_deficit = 0.0;
  /// Masses of u^n_t for n = 0..n_max.
  std::vector<double> masses;
};

/// Monotone mild-form iteration on `grid`; atoms of f0 are deposited onto it.
WildResult wild_iterate(const Measure1D& f0, const ModelParams& params, double t,
                        const VelocityGrid& grid, const WildSettings& settings = {});

struct MomentBound {
  double r = 0.0;
  /// <|cos theta|^r>
  double kappa = 0.0;
  /// 2^{max(r/2,1)} kappa
  double c_r = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double envelope = 0.0;
};

/// Gronwall envelope for the r-th absolute moment, solving
/// y' = -C1 y + C2 + C3 y^{1-1/r} from y(0) = m0. e0 is the initial second
/// moment. Throws std::invalid_argument for r <= 2 and std::domain_error
/// when C1 <= 0.
MomentBound moment_bound(double r, double m0, const ModelParams& params, double t, double e0);

/// Envelope values at each (nondecreasing) time.
std::vector<double> moment_envelope(double r, double m0, const ModelParams& params, double e0,
                                    const std::vector<double>& times);

/// <|cos theta|^r> in closed form.
double abs_cos_moment(double r);
/// Integral of |v|^r against the centered Gaussian of variance T.
double gaussian_abs_moment(double r, double temperature);

/// Squared W2 between f_t and g_t.
double kinetic_w2(const QuantileSource& a, const QuantileSource& b, double t);

}  // namespace kaclab
