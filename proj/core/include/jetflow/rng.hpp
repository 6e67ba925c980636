#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace jetflow {

/// Seedable generator with platform-independent output.
///
/// Wraps std::mt19937_64 (whose raw stream is fixed by the standard) and
/// converts bits to reals itself, since the standard distributions are
/// implementation-defined. Named substreams are derived from the seed and a
/// hash of the name, so adding a stream does not perturb the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)), seed_(seed) {}

  Rng stream(std::string_view name) const;

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t splitmix64(std::uint64_t x);
  static std::uint64_t hash(std::string_view name);

 private:
  Rng(std::uint64_t seed, int) : engine_(seed), seed_(seed) {}
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
};

}  // namespace jetflow
