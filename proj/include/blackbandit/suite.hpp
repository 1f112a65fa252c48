#pragma once

#include "blackbandit/oracle.hpp"

#include <cstdint>
#include <vector>

namespace bb {

/// Seeded suite of smooth random images.
struct SuiteSpec {
  std::size_t size = 100;
  std::uint64_t seed = 2024;
  /// Gaussian blur (pixels) applied to the white noise.
  double blur_sigma = 1.5;
  /// Standard deviation of pixel values around 0.5 before clipping.
  double contrast = 0.25;
};

/// Standardized Gaussian-blurred noise, mapped to 0.5 + contrast * z and clipped to [0,1].
Vector smooth_image(const ImageShape& shape, std::uint64_t seed, double blur_sigma, double contrast);

/// Image i is smooth_image(shape, derive_seed(seed, i)). Labels are the
/// oracle's own top class, so every input starts correctly classified
/// (label 0 for non-classifiers). Oracles without an image shape get a
/// single-row shape 1 x d x 1.
std::vector<LabeledInput> make_suite(const Oracle& oracle, const SuiteSpec& spec);

}  // namespace bb
