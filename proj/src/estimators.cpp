#include "blackbandit/estimators.hpp"

#include "blackbandit/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <vector>

namespace bb {

GradientEstimate make_estimate(Vector raw, std::uint64_t queries_spent) {
  GradientEstimate est;
  const double n = raw.norm();
  est.direction = n > 0.0 ? Vector(raw / n) : Vector::Zero(raw.size());
  est.raw = std::move(raw);
  est.queries_spent = queries_spent;
  return est;
}

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("finite-difference step must be > 0");
}

}  // namespace

double fd_directional(OracleHandle& oracle, const LabeledInput& input, const Vector& v, double delta,
                      std::optional<double> base_loss) {
  check_delta(delta);
  if (!v.allFinite()) throw InvalidArgument("direction has non-finite entries");
  const Vector& x = input.point.data;
  if (v.size() != x.size()) throw DimensionMismatch("direction and point differ in dimension");
  if (base_loss) {
    const double shifted = oracle.loss(Vector(x + delta * v), input.label);
    return (shifted - *base_loss) / delta;
  }
  const std::vector<Vector> batch{x, x + delta * v};
  const auto l = oracle.loss_batch(batch, input.label);
  return (l[1] - l[0]) / delta;
}

GradientEstimate fd_full_gradient(OracleHandle& oracle, const LabeledInput& input, double delta,
                                  FiniteDifference scheme) {
  check_delta(delta);
  const Vector& x = input.point.data;
  const auto d = x.size();
  const std::uint64_t cost = scheme == FiniteDifference::Forward ? d + 1 : 2 * d;
  oracle.ledger().require(cost);
  const std::uint64_t before = oracle.queries();

  Vector raw(d);
  if (scheme == FiniteDifference::Forward) {
    std::vector<Vector> batch;
    batch.reserve(d + 1);
    batch.push_back(x);
    for (Eigen::Index k = 0; k < d; ++k) {
      batch.push_back(x);
      batch.back()[k] += delta;
    }
    const auto l = oracle.loss_batch(batch, input.label);
    for (Eigen::Index k = 0; k < d; ++k) raw[k] = (l[k + 1] - l[0]) / delta;
  } else {
    std::vector<Vector> batch;
    batch.reserve(2 * d);
    for (Eigen::Index k = 0; k < d; ++k) {
      batch.push_back(x);
      batch.back()[k] += delta;
      batch.push_back(x);
      batch.back()[k] -= delta;
    }
    const auto l = oracle.loss_batch(batch, input.label);
    for (Eigen::Index k = 0; k < d; ++k) raw[k] = (l[2 * k] - l[2 * k + 1]) / (2.0 * delta);
  }
  return make_estimate(std::move(raw), oracle.queries() - before);
}

std::uint64_t nes_query_cost(const NesOptions& options) {
  return options.antithetic ? options.samples : options.samples + 1;
}

std::pair<GradientEstimate, ProbeMatrix> nes_estimate(OracleHandle& oracle, const LabeledInput& input,
                                                      const NesOptions& options, Rng& rng) {
  check_delta(options.delta);
  const std::size_t k = options.samples;
  if (k == 0) throw InvalidArgument("nes_estimate needs at least one probe");
  if (options.antithetic && k % 2 != 0) throw InvalidArgument("antithetic NES needs an even number of probes");
  oracle.ledger().require(nes_query_cost(options));

  const Vector& x = input.point.data;
  const auto d = x.size();
  const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
  const std::uint64_t before = oracle.queries();

  ProbeMatrix probe{Matrix(static_cast<Eigen::Index>(k), d), Vector(static_cast<Eigen::Index>(k))};
  if (options.antithetic) {
    const std::size_t pairs = k / 2;
    std::vector<Vector> batch;
    batch.reserve(k);
    for (std::size_t j = 0; j < pairs; ++j) {
      const Vector u = rng.gaussian(static_cast<std::size_t>(d), stddev);
      probe.rows.row(static_cast<Eigen::Index>(2 * j)) = u.transpose();
      probe.rows.row(static_cast<Eigen::Index>(2 * j + 1)) = -u.transpose();
      batch.push_back(x + options.delta * u);
      batch.push_back(x - options.delta * u);
    }
    const auto l = oracle.loss_batch(batch, input.label);
    for (std::size_t j = 0; j < pairs; ++j) {
      const double r = (l[2 * j] - l[2 * j + 1]) / (2.0 * options.delta);
      probe.responses[static_cast<Eigen::Index>(2 * j)] = r;
      probe.responses[static_cast<Eigen::Index>(2 * j + 1)] = -r;
    }
  } else {
    std::vector<Vector> batch;
    batch.reserve(k + 1);
    batch.push_back(x);
    for (std::size_t i = 0; i < k; ++i) {
      const Vector u = rng.gaussian(static_cast<std::size_t>(d), stddev);
      probe.rows.row(static_cast<Eigen::Index>(i)) = u.transpose();
      batch.push_back(x + options.delta * u);
    }
    const auto l = oracle.loss_batch(batch, input.label);
    for (std::size_t i = 0; i < k; ++i) probe.responses[static_cast<Eigen::Index>(i)] = (l[i + 1] - l[0]) / options.delta;
  }
  auto est = make_estimate(nes_closed_form(probe), oracle.queries() - before);
  return {std::move(est), std::move(probe)};
}

Vector nes_closed_form(const ProbeMatrix& probe) {
  if (probe.rows.rows() != probe.responses.size()) throw DimensionMismatch("probe rows != responses");
  return probe.rows.transpose() * probe.responses;
}

namespace {

Vector lsq_closed_form(const ProbeMatrix& probe) {
  if (probe.rows.rows() == 0) throw InvalidArgument("empty probe matrix");
  if (probe.rows.rows() != probe.responses.size()) throw DimensionMismatch("probe rows != responses");
  if (!probe.rows.allFinite() || !probe.responses.allFinite()) throw InvalidArgument("non-finite probes");
  const Eigen::MatrixXd gram = probe.rows * probe.rows.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= kMaxGramCondition)) {
    std::ostringstream msg;
    msg << "A A^T is singular or ill-conditioned (condition estimate " << condition << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of A A^T failed");
  const Eigen::VectorXd alpha = llt.solve(probe.responses);
  return probe.rows.transpose() * alpha;
}

}  // namespace

GradientEstimate lsq_estimate(const ProbeMatrix& probe) { return make_estimate(lsq_closed_form(probe), 0); }

double equivalence_gap(const Vector& g_star, const ProbeMatrix& probe) {
  if (g_star.size() != probe.rows.cols()) throw DimensionMismatch("g* and probe rows differ in dimension");
  return lsq_closed_form(probe).dot(g_star) - nes_closed_form(probe).dot(g_star);
}

double equivalence_bound(const BoundInputs& b) {
  if (b.k < 1) throw InvalidArgument("bound needs k >= 1");
  if (b.d < 1) throw InvalidArgument("bound needs d >= 1");
  if (!(b.p > 0.0 && b.p < 1.0)) throw InvalidArgument("bound needs p in (0, 1)");
  const double k = static_cast<double>(b.k);
  const double d = static_cast<double>(b.d);
  const double log_term = std::log((2.0 * k + 2.0) / b.p);
  const double kappa = 2.0 * std::sqrt(std::log(2.0 * k * (k + 1.0) / b.p));
  return 8.0 * std::sqrt((2.0 * k / d) * log_term * log_term * log_term) * (1.0 + kappa / std::sqrt(d));
}

}  // namespace bb
