#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace kaclab {

/// Seeded random source scoped to one consumer (replica, particle, ...).
///
/// Two streams built from the same (seed, stream id) produce bit-identical
/// draw sequences. Streams must not be shared between threads; derive one per
/// replica instead.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on {0, ..., n-1}.
  std::size_t index(std::size_t n);
  double exponential(double rate);
  double normal(double mean, double stddev);

  /// Child stream keyed by `tag`; independent of this stream's position.
  RandomStream derive(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x);

/// Stream id for replica `replica` of experiment `experiment`. Adding replicas
/// never changes the ids of existing ones.
std::uint64_t replica_stream_id(std::string_view experiment, std::uint64_t replica);

}  // namespace kaclab
