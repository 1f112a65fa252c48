#include "blackbandit/geometry.hpp"

#include "blackbandit/errors.hpp"

namespace bb {

Vector boundary_project(const Vector& g, Norm norm) {
  if (!g.allFinite()) throw InvalidArgument("boundary_project: non-finite vector");
  if (norm == Norm::Linf) {
    return g.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
  }
  const double n = g.norm();
  if (n == 0.0) throw InvalidArgument("boundary_project: zero vector has no L2 direction");
  return g / n;
}

Vector ball_project(const Vector& x, const Vector& x0, double epsilon, Norm norm, bool clamp) {
  if (x.size() != x0.size()) throw DimensionMismatch("ball_project: x and x0 differ in dimension");
  Vector out;
  if (norm == Norm::Linf) {
    out = x.array().max(x0.array() - epsilon).min(x0.array() + epsilon).matrix();
  } else {
    const Vector offset = x - x0;
    const double n = offset.norm();
    out = n > epsilon ? Vector(x0 + offset * (epsilon / n)) : x;
  }
  if (clamp) out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

Vector fgsm_step(const Vector& x0, const Vector& sign_vector, double epsilon) {
  if (x0.size() != sign_vector.size()) throw DimensionMismatch("fgsm_step: sign vector dimension");
  return (x0 + epsilon * sign_vector).cwiseMax(0.0).cwiseMin(1.0);
}

double perturbation_norm(const Vector& x, const Vector& x0, Norm norm) {
  const Vector diff = x - x0;
  return norm == Norm::L2 ? diff.norm() : diff.lpNorm<Eigen::Infinity>();
}

}  // namespace bb
