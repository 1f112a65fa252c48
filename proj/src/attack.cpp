#include "blackbandit/attack.hpp"

#include "blackbandit/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bb {

std::string to_string(Method method) {
  switch (method) {
    case Method::Whitebox: return "whitebox";
    case Method::CoordinateFd: return "coordinate_fd";
    case Method::Nes: return "nes";
    case Method::Bandit: return "bandit";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "whitebox") return Method::Whitebox;
  if (text == "coordinate_fd" || text == "fd") return Method::CoordinateFd;
  if (text == "nes") return Method::Nes;
  if (text == "bandit") return Method::Bandit;
  throw InvalidArgument("unknown attack method '" + text + "'");
}

void AttackConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be > 0");
  if (!(image_step() > 0.0) || !std::isfinite(image_step())) throw InvalidArgument("image step h must be > 0");
  if (max_queries < 2) throw InvalidArgument("max_queries must be >= 2");
  if (max_iterations == 0) throw InvalidArgument("max_iterations must be >= 1");
  if (method == Method::Nes) {
    if (nes.samples == 0) throw InvalidArgument("nes samples must be >= 1");
    if (nes.antithetic && nes.samples % 2 != 0) throw InvalidArgument("antithetic nes needs an even sample count");
    if (!(nes.delta > 0.0)) throw InvalidArgument("nes delta must be > 0");
  }
  if (method == Method::CoordinateFd && !(fd_delta > 0.0)) throw InvalidArgument("fd_delta must be > 0");
  if (method == Method::Bandit) {
    bandit.validate();
    if (priors.data && priors.tile == 0) throw InvalidArgument("tile must be >= 1");
  }
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Feasibility {
  double distance;
  double lo;
  double hi;
};

Feasibility measure(const Vector& x, const Vector& x0, Norm norm) {
  return {perturbation_norm(x, x0, norm), x.minCoeff(), x.maxCoeff()};
}

std::optional<PaddedTiling> tiling_for(const Oracle& oracle, const AttackConfig& cfg) {
  if (!cfg.priors.data) return std::nullopt;
  auto shape = oracle.shape();
  if (!shape) throw InvalidArgument("data prior needs an image-shaped oracle");
  return PaddedTiling(*shape, cfg.priors.tile);
}

}  // namespace

std::uint64_t queries_per_iteration(const AttackConfig& cfg, std::size_t dimension) {
  switch (cfg.method) {
    case Method::Whitebox: return 0;
    case Method::CoordinateFd: return cfg.fd_scheme == FiniteDifference::Forward ? dimension + 1 : 2 * dimension;
    case Method::Nes: return nes_query_cost(cfg.nes);
    case Method::Bandit: return 2;
  }
  return 0;
}

AttackResult run_attack(OraclePtr oracle_ptr, const LabeledInput& input, const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  OracleHandle oracle(std::move(oracle_ptr), cfg.max_queries);
  const Vector& x0 = input.point.data;
  oracle.oracle().check_point(x0);
  if (!oracle.oracle().is_classifier()) throw InvalidArgument("attacks need a classifier oracle");
  if (cfg.method == Method::Whitebox && !oracle.diagnostics_available()) {
    throw Unsupported("whitebox attack needs an oracle with analytic gradients");
  }

  AttackResult result;
  result.outcome.adversarial_point = input.point;
  const bool want_cosine = cfg.trace_cosine && oracle.diagnostics_available();
  const Constraint constraint = cfg.norm == Norm::Linf ? Constraint::Box : Constraint::Unconstrained;

  try {
    if (oracle.top_class(x0) != input.label) {
      throw InvalidArgument("input is already misclassified; attacks start from correctly classified inputs");
    }
    LatentState latent;
    if (cfg.method == Method::Bandit) {
      latent = LatentState::zeros(static_cast<std::size_t>(x0.size()), constraint, tiling_for(oracle.oracle(), cfg));
    }
    const LatentState initial_latent = latent;

    const auto dim = static_cast<std::size_t>(x0.size());
    Vector x = x0;
    for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
      if (!oracle.ledger().can_afford(queries_per_iteration(cfg, dim))) break;
      const LabeledInput current{Point(x, input.point.shape), input.label};
      Vector g;
      switch (cfg.method) {
        case Method::Whitebox:
          g = oracle.true_gradient(x, input.label);
          break;
        case Method::CoordinateFd:
          g = fd_full_gradient(oracle, current, cfg.fd_delta, cfg.fd_scheme).raw;
          break;
        case Method::Nes:
          g = nes_estimate(oracle, current, cfg.nes, rng).first.raw;
          break;
        case Method::Bandit: {
          if (!cfg.priors.time) latent = initial_latent;
          const Vector delta = spherical_grad_est(oracle, current, latent, cfg.bandit, rng);
          latent = bandit_step(latent, delta, cfg.bandit.eta_oco);
          g = latent.to_image();
          break;
        }
      }

      double cos = kNan;
      if (want_cosine) {
        cos = cfg.method == Method::Whitebox ? 1.0 : cosine(g, oracle.true_gradient(x, input.label));
      }
      // A zero L2 estimate has no direction; spend the iteration without moving.
      if (!(cfg.norm == Norm::L2 && g.norm() == 0.0)) {
        x = ball_project(x + cfg.image_step() * boundary_project(g, cfg.norm), x0, cfg.epsilon, cfg.norm, cfg.clamp);
      }
      result.outcome.iterations = iter;

      const auto f = measure(x, x0, cfg.norm);
      // Remote oracles get no uncounted loss calls; their trace loss stays empty.
      const double loss = oracle.diagnostics_available() ? oracle.diagnostic_loss(x, input.label) : kNan;
      result.trace.records.push_back({iter, oracle.queries(), loss, cos, f.distance, f.lo, f.hi});

      if (oracle.top_class(x) != input.label) {
        result.outcome.success = true;
        result.outcome.adversarial_point = Point(x, input.point.shape);
        break;
      }
      result.outcome.adversarial_point = Point(x, input.point.shape);
    }
  } catch (const TransportError& e) {
    result.outcome.aborted = true;
    result.outcome.success = false;
    result.outcome.abort_reason = e.what();
  }
  result.outcome.queries_used = oracle.queries();

  if (result.outcome.success) {
    // Outcome invariants, re-verified with one free classification.
    const Vector& adv = result.outcome.adversarial_point.data;
    const bool moved = oracle.top_class(adv) != input.label;
    const bool inside = perturbation_norm(adv, x0, cfg.norm) <= cfg.epsilon * (1.0 + 1e-9);
    const bool in_range = !cfg.clamp || (adv.minCoeff() >= 0.0 && adv.maxCoeff() <= 1.0);
    if (!moved || !inside || !in_range || result.outcome.queries_used > cfg.max_queries) {
      throw Error("attack outcome violates its invariants");
    }
  }
  return result;
}

AuditReport audit_attack(const AttackResult& result, const LabeledInput& input, const AttackConfig& cfg,
                         const Oracle& oracle) {
  AuditReport report;
  const double radius = cfg.epsilon * (1.0 + 1e-9);
  auto fail = [&](const std::string& what) { report.violations.push_back(what); };
  std::uint64_t last_queries = 0;
  for (const auto& r : result.trace.records) {
    ++report.records_checked;
    std::ostringstream where;
    where << "iteration " << r.iteration << ": ";
    if (r.distance > radius) fail(where.str() + "outside the epsilon ball");
    if (cfg.clamp && (r.min_value < 0.0 || r.max_value > 1.0)) fail(where.str() + "outside [0,1]");
    if (r.queries > cfg.max_queries) fail(where.str() + "query cap exceeded");
    if (r.queries < last_queries) fail(where.str() + "query count decreased");
    if (cfg.method != Method::Whitebox && r.iteration > 1 && r.queries == last_queries) {
      fail(where.str() + "query count not increasing");
    }
    last_queries = r.queries;
  }
  const auto& out = result.outcome;
  if (out.queries_used > cfg.max_queries) fail("outcome exceeds the query cap");
  if (out.success) {
    const Vector& adv = out.adversarial_point.data;
    const Vector& x0 = input.point.data;
    const int cls = oracle.top_classes(std::span<const Vector>(&adv, 1)).front();
    if (cls == input.label) fail("successful outcome is still classified as the true label");
    if (perturbation_norm(adv, x0, cfg.norm) > radius) fail("successful outcome outside the epsilon ball");
    if (cfg.clamp && (adv.minCoeff() < 0.0 || adv.maxCoeff() > 1.0)) fail("successful outcome outside [0,1]");
  }
  return report;
}

}  // namespace bb
