#pragma once

#include "blackbandit/types.hpp"

#include <cstdint>
#include <random>

namespace bb {

/// One step of the SplitMix64 sequence. Used to derive independent seeds
/// and, through SplitMix64Stream, to generate model weights reproducibly
/// from other languages.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Portable Gaussian stream: SplitMix64 uniforms fed through Box-Muller.
/// u = (next >> 11) * 2^-53, u1 = 1 - u, z0 = sqrt(-2 ln u1) cos(2 pi u2),
/// z1 = sqrt(-2 ln u1) sin(2 pi u2), emitted in that order.
class SplitMix64Stream {
 public:
  explicit SplitMix64Stream(std::uint64_t seed) : state_(seed) {}

  double uniform();
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Sampling engine for probes, sign draws and suites. Normals use the same
/// Box-Muller transform so draws do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);
  /// +1 or -1 with equal probability.
  double sign();
  /// Vector of i.i.d. N(0, stddev^2) entries.
  Vector gaussian(std::size_t n, double stddev = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bb
