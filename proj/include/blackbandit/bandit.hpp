#pragma once

#include "blackbandit/estimators.hpp"
#include "blackbandit/oracle.hpp"
#include "blackbandit/rng.hpp"
#include "blackbandit/tiling.hpp"

#include <optional>
#include <vector>

namespace bb {

/// Set K the latent vector lives in: R^n (L2 attacks) or [-1,1]^n (Linf).
enum class Constraint { Unconstrained, Box };

/// Entries of a box-constrained latent are kept within +/- this bound on construction.
inline constexpr double kBoxInteriorBound = 1.0 - 1e-9;

struct LatentState {
  Vector v;
  Constraint constraint = Constraint::Unconstrained;
  /// Present when the data prior is on: v lives on the tile grid.
  std::optional<PaddedTiling> tiling;

  /// Zero latent sized for an image of dimension `image_dim` (or the tiling's grid).
  static LatentState zeros(std::size_t image_dim, Constraint constraint,
                           std::optional<PaddedTiling> tiling = std::nullopt);
  /// Wraps `v`; box states are clamped to +/- kBoxInteriorBound.
  static LatentState from(Vector v, Constraint constraint, std::optional<PaddedTiling> tiling = std::nullopt);

  std::size_t latent_dim() const { return static_cast<std::size_t>(v.size()); }
  /// v at image resolution.
  Vector to_image() const;
};

struct BanditHyper {
  double eta_oco = 0.1;        // latent learning rate
  double delta_explore = 0.01; // exploration radius
  double fd_probe = 0.01;      // finite-difference scale of the two loss probes
  double h_image = 0.5;        // image step size, used by the attack driver

  void validate() const;

  /// ImageNet values for the Linf and L2 threat models.
  static BanditHyper imagenet_linf() { return {100.0, 1.0, 0.1, 0.01}; }
  static BanditHyper imagenet_l2() { return {0.1, 0.01, 0.01, 0.5}; }
};

/// Two-query antithetic spherical estimate of the gradient of the bandit
/// loss l(g) = -<grad L, g> at the current latent v:
///   u ~ N(0, I/d_latent), q1 = v + delta u, q2 = v - delta u,
///   Delta = (L(x + fd * up(q2)) - L(x + fd * up(q1))) / (delta * fd) * u.
/// Delta points along -grad L. Spends exactly 2 queries; throws
/// BudgetExhausted before querying when fewer than 2 remain.
Vector spherical_grad_est(OracleHandle& oracle, const LabeledInput& input, const LatentState& state,
                          const BanditHyper& hyper, Rng& rng);

/// v + eta * delta. Requires an unconstrained state.
LatentState gd_update(const LatentState& state, const Vector& delta, double eta);

/// Exponentiated-gradients step on [-1,1]^n. With p = (v+1)/2:
/// p' = p e^{eta Delta} / (p e^{eta Delta} + (1-p) e^{-eta Delta}), v' = 2p' - 1,
/// evaluated as tanh(eta Delta + atanh v) so it cannot overflow. Outputs
/// stay strictly inside (-1, 1).
LatentState eg_update(const LatentState& state, const Vector& delta, double eta);

/// Moves the latent against the spherical estimate, i.e. applies the
/// constraint's update rule (GD or EG) to -Delta, which increases <grad L, v>.
LatentState bandit_step(const LatentState& state, const Vector& delta, double eta);

struct BanditEstimation {
  GradientEstimate estimate;   // raw = v_T at image resolution
  Vector boundary;             // v_T normalized (unconstrained) or sign(v_T) (box)
  LatentState final_state;
  /// cos(v_t, grad L) after each round; empty when the oracle has no diagnostics.
  std::vector<double> cosine_trace;
  std::size_t rounds_completed = 0;
  bool complete = true;
};

/// T rounds of {Delta_t <- spherical estimate at v_{t-1}; v_t <- bandit_step}
/// at a fixed input. Spends 2 queries per round. Stops early, flagged
/// incomplete, when the budget runs out.
BanditEstimation bandit_gradient_estimation(OracleHandle& oracle, const LabeledInput& input,
                                            const BanditHyper& hyper, std::size_t rounds,
                                            LatentState initial, Rng& rng);

}  // namespace bb
