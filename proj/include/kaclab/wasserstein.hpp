#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kaclab/measure.hpp"
#include "kaclab/random.hpp"
#include "kaclab/replicas.hpp"

namespace kaclab {

/// Squared W2 values, with the decomposition terms when produced by
/// decomposition_check.
struct W2Report {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t replicas = 0;

  bool has_breakdown = false;
  /// W2^2(Law(X^1..X^k), nu^k) with the 1/k vector normalization (caller supplied).
  double marginal_term = 0.0;
  double epsilon_term = 0.0;
  /// k / N, to be multiplied by `constant`.
  double kn_term = 0.0;
  double constant = 0.0;
  double rhs = 0.0;
  /// 0.5 * value <= rhs
  bool holds = true;
};

/// (1/n) sum (x_(i) - y_(i))^2 after sorting both samples.
double w2_empirical_empirical(std::span<const double> x, std::span<const double> y);

/// Integral over (0,1) of (Q_emp - Q)^2, exact on merged pieces.
double w2_empirical_quantile(std::span<const double> x, const QuantileFn& q);

/// Mean of W2^2(empirical of k i.i.d. draws from Q, Q) over replicas.
MeanStderr epsilon_k(const QuantileFn& q, std::size_t k, std::size_t replicas, RandomStream& stream);

/// Replica mean of w2_empirical_quantile(ensemble, q).
W2Report chaos_metric(const std::vector<std::vector<double>>& ensembles, const QuantileFn& q);

/// Evaluates both sides of
///   (1/2) E W2^2(empirical X, nu) <= marginal + eps_k(nu) + C k / N
/// where the marginal term is supplied by the caller (the k-marginal distance
/// is not computable from samples). Diagnostic only.
W2Report decomposition_check(const std::vector<std::vector<double>>& ensembles, const QuantileFn& q,
                             std::size_t k, double marginal_term, double constant,
                             std::size_t eps_replicas, RandomStream& stream);

}  // namespace kaclab
