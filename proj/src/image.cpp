#include "blackbandit/image.hpp"

#include "blackbandit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bb {

namespace {

std::vector<double> kernel_for(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& w : k) w /= total;
  return k;
}

}  // namespace

Vector gaussian_blur(const Vector& image, const ImageShape& shape, double sigma) {
  if (static_cast<std::size_t>(image.size()) != shape.size()) {
    throw DimensionMismatch("blur: image length does not match shape");
  }
  if (sigma <= 0.0) return image;
  const auto kernel = kernel_for(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int height = static_cast<int>(shape.height);
  const int width = static_cast<int>(shape.width);

  Vector rows(image.size());
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      for (std::size_t c = 0; c < shape.channels; ++c) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int ww = std::clamp(w + t, 0, width - 1);
          acc += kernel[t + radius] * image[shape.index(h, ww, c)];
        }
        rows[shape.index(h, w, c)] = acc;
      }
    }
  }
  Vector out(image.size());
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      for (std::size_t c = 0; c < shape.channels; ++c) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int hh = std::clamp(h + t, 0, height - 1);
          acc += kernel[t + radius] * rows[shape.index(hh, w, c)];
        }
        out[shape.index(h, w, c)] = acc;
      }
    }
  }
  return out;
}

}  // namespace bb
