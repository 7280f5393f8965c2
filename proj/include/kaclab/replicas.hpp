#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <type_traits>
#include <vector>

#include <omp.h>

namespace kaclab {

/// Runs job(r) for r = 0..count-1 across `threads` OpenMP threads (0 keeps the
/// runtime default). Results land in slot r, so any later reduction in index
/// order is independent of scheduling. The first exception thrown by a job is
/// rethrown after the loop.
template <class Job>
auto run_replicas(std::size_t count, int threads, Job&& job)
    -> std::vector<std::invoke_result_t<Job&, std::size_t>> {
  using R = std::invoke_result_t<Job&, std::size_t>;
  std::vector<std::optional<R>> slots(count);
  std::exception_ptr error;
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (long long r = 0; r < n; ++r) {
    try {
      slots[static_cast<std::size_t>(r)].emplace(job(static_cast<std::size_t>(r)));
    } catch (...) {
#pragma omp critical(kaclab_replica_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Serial reference for run_replicas.
template <class Job>
auto run_replicas_serial(std::size_t count, Job&& job)
    -> std::vector<std::invoke_result_t<Job&, std::size_t>> {
  std::vector<std::invoke_result_t<Job&, std::size_t>> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) out.push_back(job(r));
  return out;
}

/// Mean and standard error of the mean.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& x) {
  MeanStderr out;
  out.n = x.size();
  if (x.empty()) return out;
  double s = 0.0;
  for (double v : x) s += v;
  out.mean = s / static_cast<double>(x.size());
  if (x.size() < 2) return out;
  double ss = 0.0;
  for (double v : x) ss += (v - out.mean) * (v - out.mean);
  const double var = ss / static_cast<double>(x.size() - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(x.size()));
  return out;
}

}  // namespace kaclab
