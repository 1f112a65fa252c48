#pragma once

#include "blackbandit/bandit.hpp"
#include "blackbandit/estimators.hpp"
#include "blackbandit/geometry.hpp"
#include "blackbandit/oracle.hpp"
#include "blackbandit/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bb {

enum class Method { Whitebox, CoordinateFd, Nes, Bandit };

std::string to_string(Method method);
Method parse_method(const std::string& text);

/// Priors used by the bandit attack. The time prior carries the latent
/// across PGD iterations; the data prior runs it on a tile grid.
struct BanditPriors {
  bool time = true;
  bool data = false;
  std::size_t tile = 2;
};

struct AttackConfig {
  Method method = Method::Nes;
  Norm norm = Norm::Linf;
  double epsilon = 0.05;
  /// Image step h for whitebox, coordinate-FD and NES. Bandit attacks use bandit.h_image.
  double step = 0.01;
  std::uint64_t max_queries = 10000;
  /// Hard stop for methods that never touch the ledger (whitebox).
  std::size_t max_iterations = 10000;
  NesOptions nes;
  double fd_delta = 1e-3;
  FiniteDifference fd_scheme = FiniteDifference::Forward;
  BanditHyper bandit;
  BanditPriors priors;
  bool clamp = true;
  /// Record cos(estimate, true gradient) per iteration when diagnostics exist.
  bool trace_cosine = true;

  void validate() const;
  double image_step() const { return method == Method::Bandit ? bandit.h_image : step; }
};

struct AttackOutcome {
  bool success = false;
  /// Oracle transport failure; distinct from running out of budget.
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t queries_used = 0;
  Point adversarial_point;
  std::size_t iterations = 0;
};

struct TraceRecord {
  std::size_t iteration = 0;
  std::uint64_t queries = 0;
  /// Diagnostic (uncounted) loss at the new iterate; NaN for oracles without diagnostics.
  double loss = 0.0;
  /// cos(latent or estimate, true gradient); NaN without diagnostics.
  double cosine = 0.0;
  /// ||x_t - x_0|| in the attack norm, and the iterate's value range, for auditing.
  double distance = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

struct AttackTrace {
  std::vector<TraceRecord> records;
};

struct AttackResult {
  AttackOutcome outcome;
  AttackTrace trace;
};

/// Loss queries one PGD iteration of this method spends at the given dimension.
std::uint64_t queries_per_iteration(const AttackConfig& config, std::size_t dimension);

/// Untargeted PGD with the configured gradient source until the top class
/// changes or the query budget cannot pay for another estimate. Bandit
/// attacks interleave one latent update (2 queries) with one image step.
/// Throws InvalidArgument when the input is already misclassified.
AttackResult run_attack(OraclePtr oracle, const LabeledInput& input, const AttackConfig& config, Rng& rng);

struct AuditReport {
  std::size_t records_checked = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every trace record against the epsilon-ball, the [0,1] range (when
/// clamping) and the budget, and every outcome against its invariants.
AuditReport audit_attack(const AttackResult& result, const LabeledInput& input, const AttackConfig& config,
                         const Oracle& oracle);

}  // namespace bb
