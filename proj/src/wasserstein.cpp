#include "kaclab/wasserstein.hpp"

#include <algorithm>
#include <stdexcept>

namespace kaclab {

double w2_empirical_empirical(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("w2_empirical_empirical: length mismatch");
  if (x.empty()) throw std::invalid_argument("w2_empirical_empirical: empty samples");
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double w2_empirical_quantile(std::span<const double> x, const QuantileFn& q) {
  std::vector<double> a(x.begin(), x.end());
  std::sort(a.begin(), a.end());
  return w2_sorted_quantile(a, q);
}

MeanStderr epsilon_k(const QuantileFn& q, std::size_t k, std::size_t replicas, RandomStream& stream) {
  if (k < 1) throw std::invalid_argument("epsilon_k: k must be positive");
  if (replicas < 1) throw std::invalid_argument("epsilon_k: need at least one replica");
  std::vector<double> vals(replicas);
  std::vector<double> x(k);
  for (std::size_t r = 0; r < replicas; ++r) {
    for (auto& v : x) v = q(stream.uniform());
    vals[r] = w2_empirical_quantile(x, q);
  }
  return mean_stderr(vals);
}

W2Report chaos_metric(const std::vector<std::vector<double>>& ensembles, const QuantileFn& q) {
  if (ensembles.empty()) throw std::invalid_argument("chaos_metric: no ensembles");
  std::vector<double> vals;
  vals.reserve(ensembles.size());
  for (const auto& e : ensembles) vals.push_back(w2_empirical_quantile(e, q));
  const MeanStderr m = mean_stderr(vals);
  W2Report r;
  r.value = m.mean;
  r.stderr_ = m.stderr_;
  r.replicas = m.n;
  return r;
}

W2Report decomposition_check(const std::vector<std::vector<double>>& ensembles, const QuantileFn& q,
                             std::size_t k, double marginal_term, double constant,
                             std::size_t eps_replicas, RandomStream& stream) {
  W2Report r = chaos_metric(ensembles, q);
  const std::size_t n = ensembles.front().size();
  if (k < 1 || k > n) throw std::invalid_argument("decomposition_check: need 1 <= k <= N");
  if (marginal_term < 0.0) throw std::invalid_argument("decomposition_check: negative marginal term");
  r.has_breakdown = true;
  r.marginal_term = marginal_term;
  r.epsilon_term = epsilon_k(q, k, eps_replicas, stream).mean;
  r.kn_term = static_cast<double>(k) / static_cast<double>(n);
  r.constant = constant;
  r.rhs = r.marginal_term + r.epsilon_term + constant * r.kn_term;
  r.holds = 0.5 * r.value <= r.rhs;
  return r;
}

}  // namespace kaclab
