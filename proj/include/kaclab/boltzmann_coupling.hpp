#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "kaclab/kinetic_solver.hpp"
#include "kaclab/measure.hpp"
#include "kaclab/model.hpp"
#include "kaclab/random.hpp"

namespace kaclab {

/// Values kept sorted by (value, index) for O(log N) rank queries.
class RankIndex {
 public:
  explicit RankIndex(std::span<const double> values);

  /// Moves entry i from old_value to new_value.
  void update(std::size_t i, double old_value, double new_value);
  /// Number of entries (v, j) ordered strictly before (value, index).
  std::size_t rank(double value, std::size_t index) const;
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<std::pair<double, std::size_t>> sorted_;
};

/// Rank u in (0,1) assigned to label xi for particle i: with p = floor(xi),
/// u = (rank of z_p among the values other than z_i + frac(xi)) / (N - 1),
/// ties broken by index.
double transport_rank(std::span<const double> z, std::size_t i, double xi);

/// F^i(z, xi) = Q(transport_rank(z, i, xi)). Throws std::invalid_argument when
/// xi lies outside [0, N) or in the block [i, i+1) (0-based).
double transport_map(std::span<const double> z, std::size_t i, double xi, const QuantileFn& q);

struct CoupledTrajectory {
  std::vector<double> V;
  std::vector<double> Z;
  std::vector<double> times;
  /// (1/N) sum (V_i - Z_i)^2
  std::vector<double> h;
  /// W2^2 between the empirical measure of Z without particle 0 and f_t.
  std::vector<double> a;
  std::size_t events = 0;
};

using CoupledObserver =
    std::function<void(std::size_t, double, const std::vector<double>&, const std::vector<double>&)>;

/// Particle system V and Boltzmann processes Z driven by one event stream.
/// Kac event (i, j): V by kac_rotate; Z_i <- Z_i cos - F^i(Z, zeta) sin and
/// Z_j <- Z_j cos + F^j(Z, xi) sin on the pre-jump Z. Thermostat events hit
/// V_i and Z_i with the same (theta, w).
CoupledTrajectory simulate_coupled(std::vector<double> V0, std::vector<double> Z0,
                                   const ModelParams& params, const QuantileSource& solution,
                                   double t_end, RandomStream& stream,
                                   const std::vector<double>& sample_times,
                                   const CoupledObserver& observer = {});

struct DecoupledTrajectory {
  std::vector<double> Z;
  std::vector<double> Z_tilde;
  std::vector<double> times;
  /// Mean of (Z_i - Z~_i)^2 over particles in the floor(N/k) blocks.
  std::vector<double> h_dec;
  std::size_t skipped = 0;
  std::size_t replacements = 0;
};

/// Independent copies Z~ for every block of k consecutive particles. Z~_i copies
/// the jumps of Z_i except second-member jumps whose partner lies in the same
/// block; those are replaced by jumps from `extra_stream` at rate
/// lambda (k-1)/(N-1) with a partner label uniform on the block minus i. The
/// transport map always reads the driving array Z.
DecoupledTrajectory simulate_independent_copies(std::vector<double> Z0, std::size_t k,
                                                const ModelParams& params,
                                                const QuantileSource& solution, double t_end,
                                                RandomStream& stream, RandomStream& extra_stream,
                                                const std::vector<double>& sample_times);

/// Single Boltzmann process: partner jumps at rate 2 lambda against Q_{f_t} of
/// a uniform rank, thermostat jumps at rate mu. Returns z at each sample time.
std::vector<double> simulate_boltzmann(double z0, const ModelParams& params,
                                       const QuantileSource& solution, double t_end,
                                       RandomStream& stream, const std::vector<double>& sample_times);

}  // namespace kaclab
