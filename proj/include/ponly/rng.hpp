#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ponly {

/// SplitMix64 finalizer. Used both for seeding and for deriving
/// independent child seeds from (seed, index) pairs.
std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for stream `index` of a parent `seed`. Replicate k of a sweep
/// uses derive_seed(seed, k), so results do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// xoshiro256** generator seeded through SplitMix64.
///
/// All distributions are implemented here rather than through <random> so
/// that a (seed, call sequence) pair yields identical draws on every
/// standard library.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  /// Generator for stream `index` of `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(derive_seed(seed, index));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Marsaglia polar method, spare value cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson(mean). Inversion below 30, PTRS transformed rejection above.
  std::uint64_t poisson(double mean);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ponly
