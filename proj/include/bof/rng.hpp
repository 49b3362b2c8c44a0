#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace bof {

/// Deterministic random source used everywhere randomness is needed.
///
/// The engine is MT19937-64 (std::mt19937_64) seeded with the given 64-bit
/// seed. Only its raw 64-bit output is consumed; the derived draws below are
/// defined here rather than through <random> distributions, whose output is
/// implementation-defined:
///   - uniform01:     (x >> 11) * 2^-53, in [0, 1)
///   - uniform_below: rejection sampling, reject x < (2^64 - n) mod n,
///                    return x mod n
///   - normal:        Box-Muller on two uniform01 draws (u1 mapped to (0,1]),
///                    returning the cosine branch and caching the sine branch
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t uniform_below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Per-item seed from a run seed and an item name (FNV-1a of the name,
// xor the seed, then mix64). Keeps per-image draws independent of corpus
// ordering.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

// Uniform subset of `count` indices out of [0, n), returned ascending.
// Partial Fisher-Yates over the identity permutation: for i in [0, count),
// j = i + uniform_below(n - i), swap(idx[i], idx[j]).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng);

}  // namespace bof
