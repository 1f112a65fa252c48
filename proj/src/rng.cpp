#include "blackbandit/rng.hpp"

#include <cmath>
#include <numbers>

namespace bb {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  splitmix64(state);
  return splitmix64(state);
}

namespace {

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Box-Muller on u in [0,1); 1-u keeps the log argument away from zero.
std::pair<double, double> box_muller(double u_a, double u_b) {
  const double radius = std::sqrt(-2.0 * std::log(1.0 - u_a));
  const double angle = 2.0 * std::numbers::pi * u_b;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

double SplitMix64Stream::uniform() { return to_unit(splitmix64(state_)); }

double SplitMix64Stream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double a = uniform();
  const double b = uniform();
  auto [z0, z1] = box_muller(a, b);
  spare_ = z1;
  has_spare_ = true;
  return z0;
}

double Rng::uniform() { return to_unit(engine_()); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double a = uniform();
  const double b = uniform();
  auto [z0, z1] = box_muller(a, b);
  spare_ = z1;
  has_spare_ = true;
  return z0;
}

std::size_t Rng::index(std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

double Rng::sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

Vector Rng::gaussian(std::size_t n, double stddev) {
  Vector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = stddev * normal();
  return out;
}

}  // namespace bb
