#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mdreg {

/// Seeded generator with platform-independent distributions.
///
/// std::mt19937_64 is bit-specified by the standard, the std distributions
/// are not, so uniform/normal/sampling are implemented here on top of the raw
/// engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// `count` distinct draws from [0, population), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace mdreg
