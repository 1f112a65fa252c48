#include "blackbandit/types.hpp"

#include "blackbandit/errors.hpp"

namespace bb {

Point::Point(Vector d, std::optional<ImageShape> s) : data(std::move(d)), shape(s) {
  if (shape && shape->size() != dimension()) {
    throw DimensionMismatch("point shape " + std::to_string(shape->height) + "x" +
                            std::to_string(shape->width) + "x" + std::to_string(shape->channels) +
                            " does not match length " + std::to_string(dimension()));
  }
  if (!data.allFinite()) throw InvalidArgument("point has non-finite entries");
}

std::string to_string(Norm norm) { return norm == Norm::L2 ? "l2" : "linf"; }

Norm parse_norm(const std::string& text) {
  if (text == "l2" || text == "L2") return Norm::L2;
  if (text == "linf" || text == "Linf" || text == "inf") return Norm::Linf;
  throw InvalidArgument("unknown norm '" + text + "' (expected l2 or linf)");
}

double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace bb
