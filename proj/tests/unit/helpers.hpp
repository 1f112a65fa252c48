#pragma once

#include "blackbandit/oracle.hpp"

#include <initializer_list>
#include <memory>

namespace bbtest {

inline bb::Vector vec(std::initializer_list<double> values) {
  bb::Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline bb::LabeledInput input(const bb::Vector& x, int label = 0) { return {bb::Point(x), label}; }

inline std::shared_ptr<bb::LinearOracle> linear(std::initializer_list<double> c) {
  return std::make_shared<bb::LinearOracle>(vec(c));
}

// Loss that ignores its input.
class ConstantOracle final : public bb::Oracle {
 public:
  ConstantOracle(std::size_t dim, double value) : dim_(dim), value_(value) {}
  bb::OracleKind kind() const override { return bb::OracleKind::Linear; }
  std::size_t dimension() const override { return dim_; }

 protected:
  std::vector<double> compute_losses(std::span<const bb::Vector> points, int) const override {
    return std::vector<double>(points.size(), value_);
  }
  bb::Vector compute_gradient(const bb::Vector&, int) const override { return bb::Vector::Zero(dim_); }

 private:
  std::size_t dim_;
  double value_;
};

}  // namespace bbtest
