#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace harvest {

/// Seeded 64-bit generator with portable streams.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation defined, so the
/// conversions to doubles, bounded integers and normals are done here.
/// split() derives an independent child stream from (seed, stream id) through
/// the SplitMix64 finalizer, so a child never depends on how far the parent
/// has been advanced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  static std::uint64_t mix(std::uint64_t x) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::uint64_t stream) const;

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace harvest
