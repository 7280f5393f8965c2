#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace kaclab {

/// Symmetric uniform grid v_i = (i - M) dv, i = 0..2M, dv = v_max / M.
struct VelocityGrid {
  double v_max = 8.0;
  std::size_t half_points = 2048;

  std::size_t size() const { return 2 * half_points + 1; }
  double dv() const { return v_max / static_cast<double>(half_points); }
  double at(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(half_points)) * dv();
  }
  /// Trapezoid weight of node i.
  double weight(std::size_t i) const { return (i == 0 || i + 1 == size()) ? 0.5 * dv() : dv(); }
  bool operator==(const VelocityGrid&) const = default;
};

class QuantileFn;

/// Nonnegative finite measure on the line: sorted atoms, or a density sampled
/// on a VelocityGrid integrated by the trapezoid rule.
class Measure1D {
 public:
  enum class Kind { Atoms, Grid };

  Measure1D() = default;

  /// Atoms need not be sorted or distinct; they are sorted stably by position.
  static Measure1D atoms(std::vector<double> positions, std::vector<double> weights);
  static Measure1D equal_atoms(std::span<const double> positions);
  static Measure1D dirac(double x) { return atoms({x}, {1.0}); }
  static Measure1D grid(const VelocityGrid& grid, std::vector<double> density);
  /// Centered Gaussian of variance `temperature`, sampled on `grid` and
  /// renormalized to unit trapezoid mass.
  static Measure1D gaussian(double temperature, const VelocityGrid& grid);

  Kind kind() const { return kind_; }
  bool is_atoms() const { return kind_ == Kind::Atoms; }

  const std::vector<double>& positions() const { return positions_; }
  const std::vector<double>& weights() const { return weights_; }
  const VelocityGrid& velocity_grid() const { return grid_; }
  const std::vector<double>& density() const { return weights_; }

  double mass() const { return mass_; }
  /// Integral of |v|^r.
  double abs_moment(double r) const;
  /// Integral of v^r for integer r.
  double moment(int r) const;

  /// Mass of (-inf, x].
  double cdf(double x) const;

  /// Merges atoms at identical positions. Grid measures are returned as is.
  Measure1D merged() const;
  Measure1D scaled(double factor) const;
  /// Reflection v -> -v averaged with the measure itself.
  Measure1D symmetrized() const;

  /// Node masses of a grid measure, or the CIC deposit of atoms onto `target`.
  /// Mass beyond the grid ends is folded into the end nodes.
  std::vector<double> node_masses(const VelocityGrid& target) const;

  /// Quantile function of the normalized measure.
  QuantileFn quantile() const;

  /// Throws std::invalid_argument on negative weights or non-finite entries.
  void validate() const;

 private:
  Kind kind_ = Kind::Atoms;
  std::vector<double> positions_;
  std::vector<double> weights_;
  VelocityGrid grid_;
  double mass_ = 0.0;

  void refresh_mass();
};

/// Measure file reader/writer: `v,weight` (atoms) or `v,density` (grid).
void write_measure_csv(std::ostream& out, const Measure1D& m);
Measure1D read_measure_csv(std::istream& in);

/// One monotone piece of a quantile function on [u0, u1].
struct QuantilePiece {
  double u0, u1;
  double q0, q1;
};

/// Nondecreasing map u in (0,1) -> velocity, piecewise linear with flat
/// pieces at atoms. Q(u) = inf{v : F(v) >= u}, so ties go to the leftmost knot.
class QuantileFn {
 public:
  QuantileFn() = default;

  /// Knot v carries left and right CDF limits; between knots the CDF is linear.
  /// The CDF is normalized by its final right limit.
  static QuantileFn from_knots(std::span<const double> v, std::span<const double> f_left,
                               std::span<const double> f_right);
  static QuantileFn point_mass(double x);
  /// Uniform on [a, b].
  static QuantileFn uniform(double a, double b);

  double operator()(double u) const;
  const std::vector<QuantilePiece>& pieces() const { return pieces_; }

  /// Integral over [0,1] of Q^r for r = 1, 2.
  double mean() const;
  double second_moment() const;

 private:
  std::vector<QuantilePiece> pieces_;
  std::size_t locate(double u) const;
  friend double w2_squared(const QuantileFn&, const QuantileFn&);
  friend double w2_sorted_quantile(std::span<const double>, const QuantileFn&);
};

/// Squared W2 distance between the laws with quantiles a and b.
double w2_squared(const QuantileFn& a, const QuantileFn& b);

/// Squared W2 between the empirical measure of sorted samples and Q, computed
/// exactly on merged rank/piece intervals.
double w2_sorted_quantile(std::span<const double> sorted, const QuantileFn& q);

}  // namespace kaclab
