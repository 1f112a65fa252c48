#include "blackbandit/bandit.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bb {

LatentState LatentState::zeros(std::size_t image_dim, Constraint constraint, std::optional<PaddedTiling> tiling) {
  std::size_t n = image_dim;
  if (tiling) {
    if (tiling->image().size() != image_dim) throw DimensionMismatch("tiling image does not match dimension");
    n = tiling->latent_size();
  }
  return LatentState{Vector::Zero(static_cast<Eigen::Index>(n)), constraint, std::move(tiling)};
}

LatentState LatentState::from(Vector v, Constraint constraint, std::optional<PaddedTiling> tiling) {
  if (!v.allFinite()) throw InvalidArgument("latent has non-finite entries");
  if (tiling && static_cast<std::size_t>(v.size()) != tiling->latent_size()) {
    throw DimensionMismatch("latent length does not match the tiling grid");
  }
  if (constraint == Constraint::Box) v = v.cwiseMax(-kBoxInteriorBound).cwiseMin(kBoxInteriorBound);
  return LatentState{std::move(v), constraint, std::move(tiling)};
}

Vector LatentState::to_image() const { return tiling ? tiling->to_image(v) : v; }

void BanditHyper::validate() const {
  const auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!positive(eta_oco)) throw InvalidArgument("bandit eta_oco must be > 0");
  if (!positive(delta_explore)) throw InvalidArgument("bandit delta_explore must be > 0");
  if (!positive(fd_probe)) throw InvalidArgument("bandit fd_probe must be > 0");
  if (!positive(h_image)) throw InvalidArgument("bandit h_image must be > 0");
}

Vector spherical_grad_est(OracleHandle& oracle, const LabeledInput& input, const LatentState& state,
                          const BanditHyper& hyper, Rng& rng) {
  hyper.validate();
  oracle.ledger().require(2);
  const std::size_t n = state.latent_dim();
  const Vector u = rng.gaussian(n, 1.0 / std::sqrt(static_cast<double>(n)));
  LatentState q1 = state;
  LatentState q2 = state;
  q1.v = state.v + hyper.delta_explore * u;
  q2.v = state.v - hyper.delta_explore * u;
  const Vector& x = input.point.data;
  const std::vector<Vector> probes{x + hyper.fd_probe * q1.to_image(), x + hyper.fd_probe * q2.to_image()};
  const auto l = oracle.loss_batch(probes, input.label);
  return ((l[1] - l[0]) / (hyper.delta_explore * hyper.fd_probe)) * u;
}

namespace {

void check_update(const LatentState& state, const Vector& delta, double eta) {
  if (delta.size() != state.v.size()) throw DimensionMismatch("update: delta and latent differ in dimension");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("update: learning rate must be > 0");
  if (!delta.allFinite()) throw InvalidArgument("update: non-finite delta");
}

}  // namespace

LatentState gd_update(const LatentState& state, const Vector& delta, double eta) {
  if (state.constraint != Constraint::Unconstrained) throw InvalidArgument("gd_update needs an unconstrained latent");
  check_update(state, delta, eta);
  LatentState out = state;
  out.v += eta * delta;
  return out;
}

LatentState eg_update(const LatentState& state, const Vector& delta, double eta) {
  if (state.constraint != Constraint::Box) throw InvalidArgument("eg_update needs a box-constrained latent");
  check_update(state, delta, eta);
  if ((state.v.array().abs() >= 1.0).any()) throw InvalidArgument("eg_update: latent entry at the box boundary");
  // p'/(1-p') = p/(1-p) * e^{2 eta Delta}, and p/(1-p) = e^{2 atanh v}.
  const double inside = std::nextafter(1.0, 0.0);
  LatentState out = state;
  for (Eigen::Index i = 0; i < out.v.size(); ++i) {
    const double moved = std::tanh(eta * delta[i] + std::atanh(state.v[i]));
    out.v[i] = std::clamp(moved, -inside, inside);
  }
  return out;
}

LatentState bandit_step(const LatentState& state, const Vector& delta, double eta) {
  return state.constraint == Constraint::Box ? eg_update(state, -delta, eta) : gd_update(state, -delta, eta);
}

BanditEstimation bandit_gradient_estimation(OracleHandle& oracle, const LabeledInput& input,
                                            const BanditHyper& hyper, std::size_t rounds,
                                            LatentState initial, Rng& rng) {
  if (rounds == 0) throw InvalidArgument("bandit estimation needs at least one round");
  hyper.validate();
  const bool diagnostics = oracle.diagnostics_available();
  const Vector true_grad = diagnostics ? oracle.true_gradient(input.point.data, input.label) : Vector();

  BanditEstimation result{GradientEstimate{}, Vector(), std::move(initial), {}, 0, true};
  const std::uint64_t before = oracle.queries();
  for (std::size_t t = 0; t < rounds; ++t) {
    if (!oracle.ledger().can_afford(2)) {
      result.complete = false;
      break;
    }
    const Vector delta = spherical_grad_est(oracle, input, result.final_state, hyper, rng);
    result.final_state = bandit_step(result.final_state, delta, hyper.eta_oco);
    ++result.rounds_completed;
    if (diagnostics) result.cosine_trace.push_back(cosine(result.final_state.to_image(), true_grad));
  }
  Vector g = result.final_state.to_image();
  if (result.final_state.constraint == Constraint::Box) {
    result.boundary = boundary_project(g, Norm::Linf);
  } else {
    result.boundary = g.norm() > 0.0 ? boundary_project(g, Norm::L2) : Vector::Zero(g.size());
  }
  result.estimate = make_estimate(std::move(g), oracle.queries() - before);
  return result;
}

}  // namespace bb
