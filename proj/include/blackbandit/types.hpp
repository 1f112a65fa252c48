#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>

namespace bb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Image layout. Flattening is row-major: height, then width, then channel.
struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t size() const { return height * width * channels; }
  std::size_t index(std::size_t h, std::size_t w, std::size_t c) const {
    return (h * width + w) * channels + c;
  }
  bool operator==(const ImageShape&) const = default;
};

struct Point {
  Vector data;
  std::optional<ImageShape> shape;

  Point() = default;
  explicit Point(Vector d, std::optional<ImageShape> s = std::nullopt);

  std::size_t dimension() const { return static_cast<std::size_t>(data.size()); }
};

struct LabeledInput {
  Point point;
  int label = 0;
};

enum class Norm { L2, Linf };

std::string to_string(Norm norm);
Norm parse_norm(const std::string& text);

/// Cosine similarity; returns 0 when either vector is zero.
double cosine(const Vector& a, const Vector& b);

}  // namespace bb
