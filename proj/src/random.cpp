#include "kaclab/random.hpp"

#include <cmath>
#include <stdexcept>

namespace kaclab {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::seed_seq make_seed_sequence(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(stream ^ 0x5851f42d4c957f2dULL);
  return std::seed_seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                       static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  auto seq = make_seed_sequence(seed, stream_id);
  engine_.seed(seq);
}

double RandomStream::uniform() {
  double u = unit_(engine_);
  while (u >= 1.0) u = unit_(engine_);
  return u;
}

std::size_t RandomStream::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double RandomStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("RandomStream::exponential: rate must be positive");
  return -std::log1p(-uniform()) / rate;
}

double RandomStream::normal(double mean, double stddev) {
  return mean + stddev * normal_(engine_);
}

RandomStream RandomStream::derive(std::uint64_t tag) const {
  return RandomStream(seed_, mix64(stream_id_ ^ mix64(tag + 0x2545f4914f6cdd1dULL)));
}

std::uint64_t replica_stream_id(std::string_view experiment, std::uint64_t replica) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : experiment) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ mix64(replica));
}

}  // namespace kaclab
