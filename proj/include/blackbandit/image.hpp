#pragma once

#include "blackbandit/types.hpp"

namespace bb {

/// Separable Gaussian blur of each channel, truncated at 3 sigma, with
/// edge pixels replicated. sigma <= 0 returns the input unchanged.
Vector gaussian_blur(const Vector& image, const ImageShape& shape, double sigma);

}  // namespace bb
