#include "blackbandit/suite.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/image.hpp"
#include "blackbandit/rng.hpp"

#include <cmath>

namespace bb {

Vector smooth_image(const ImageShape& shape, std::uint64_t seed, double blur_sigma, double contrast) {
  Rng rng(seed);
  Vector z = gaussian_blur(rng.gaussian(shape.size()), shape, blur_sigma);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().mean();
  z = (z.array() - mean) / (var > 0.0 ? std::sqrt(var) : 1.0);
  return (0.5 + contrast * z.array()).max(0.0).min(1.0).matrix();
}

std::vector<LabeledInput> make_suite(const Oracle& oracle, const SuiteSpec& spec) {
  if (spec.size == 0) throw InvalidArgument("suite size must be >= 1");
  const ImageShape shape = oracle.shape().value_or(ImageShape{1, oracle.dimension(), 1});
  std::vector<LabeledInput> suite;
  suite.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    Vector x = smooth_image(shape, derive_seed(spec.seed, i), spec.blur_sigma, spec.contrast);
    int label = 0;
    if (oracle.is_classifier()) label = oracle.top_classes(std::span<const Vector>(&x, 1)).front();
    suite.push_back({Point(std::move(x), oracle.shape()), label});
  }
  return suite;
}

}  // namespace bb
