#pragma once

#include "blackbandit/oracle.hpp"
#include "blackbandit/rng.hpp"
#include "blackbandit/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace bb {

/// Probe directions (rows of A, k x d) and their measured responses y ~ A g.
struct ProbeMatrix {
  Matrix rows;
  Vector responses;

  std::size_t queries() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(rows.cols()); }
};

struct GradientEstimate {
  Vector raw;
  /// raw / ||raw||_2, or the zero vector when raw is zero.
  Vector direction;
  std::uint64_t queries_spent = 0;
};

GradientEstimate make_estimate(Vector raw, std::uint64_t queries_spent);

enum class FiniteDifference { Forward, Central };

/// (L(x + delta v) - L(x)) / delta. Spends 2 queries, or 1 when the base
/// loss L(x) is supplied by the caller.
double fd_directional(OracleHandle& oracle, const LabeledInput& input, const Vector& v, double delta,
                      std::optional<double> base_loss = std::nullopt);

/// Coordinate-wise estimate along every standard basis vector. Forward
/// differences share L(x) and spend d + 1 queries; central spend 2d.
GradientEstimate fd_full_gradient(OracleHandle& oracle, const LabeledInput& input, double delta,
                                  FiniteDifference scheme = FiniteDifference::Forward);

struct NesOptions {
  std::size_t samples = 100;  // k, probe rows
  double delta = 0.01;        // finite-difference step
  bool antithetic = true;
};

/// Queries spent by one nes_estimate call with these options.
std::uint64_t nes_query_cost(const NesOptions& options);

/// Gaussian-probe estimate raw = A^T y with rows drawn from N(0, I/d).
/// With antithetic pairing the k rows come in +/- pairs, each pair measured
/// by a symmetric difference, so the base loss cancels and k queries are
/// spent; otherwise forward differences around a shared L(x) spend k + 1.
std::pair<GradientEstimate, ProbeMatrix> nes_estimate(OracleHandle& oracle, const LabeledInput& input,
                                                      const NesOptions& options, Rng& rng);

/// A^T y for a given probe set.
Vector nes_closed_form(const ProbeMatrix& probe);

/// Largest admissible condition number of A A^T.
inline constexpr double kMaxGramCondition = 1e12;

/// Minimum-norm interpolant A^T (A A^T)^{-1} y via a dense Cholesky solve of
/// the k x k Gram system. Throws NumericalError (with the condition estimate)
/// when A A^T is singular or worse conditioned than kMaxGramCondition.
GradientEstimate lsq_estimate(const ProbeMatrix& probe);

/// <x_LSQ, g> - <x_NES, g>, both closed forms taken on the same probe set.
double equivalence_gap(const Vector& g_star, const ProbeMatrix& probe);

struct BoundInputs {
  std::size_t k = 1;
  std::size_t d = 1;
  double p = 0.05;
};

/// High-probability bound on equivalence_gap in units of ||g||^2:
/// 8 sqrt((2k/d) log^3((2k+2)/p)) (1 + kappa/sqrt(d)),
/// kappa = 2 sqrt(log(2k(k+1)/p)).
double equivalence_bound(const BoundInputs& b);

}  // namespace bb
