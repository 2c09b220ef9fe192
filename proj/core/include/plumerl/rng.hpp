#pragma once

#include <cstdint>
#include <random>

namespace plumerl {

/// Deterministic random stream. All distribution code is explicit so that a
/// given seed produces the same byte-for-byte results on every platform and
/// standard library; nothing here depends on std:: distribution internals.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in the closed range [lo, hi], rejection sampled.
  int uniform_int(int lo, int hi);
  /// Standard normal draw (Marsaglia polar, one cached spare).
  double normal();

  /// Derive an independent child stream. Distinct tags give distinct,
  /// reproducible streams regardless of how much this rng has been consumed.
  Rng child(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 mixing step; used for seed derivation.
std::uint64_t split_mix64(std::uint64_t x);

} // namespace plumerl
