#pragma once

#include "blackbandit/attack.hpp"
#include "blackbandit/oracle.hpp"
#include "blackbandit/suite.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bb {

/// Mean and Monte-Carlo standard error of a sample.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};
MeanStderr mean_stderr(std::span<const double> values);

// ---------------------------------------------------------------------------
// Sign-fraction (single FGSM step with partially correct signs)

enum class SignSelection { TopK, RandomK };
std::string to_string(SignSelection selection);
SignSelection parse_sign_selection(const std::string& text);

struct SignFractionRow {
  SignSelection selection = SignSelection::TopK;
  double fraction = 0.0;
  double adversarial_rate = 0.0;
  double stderr_ = 0.0;
};

/// For each fraction rho the round(rho d) selected coordinates get the true
/// gradient sign (top-k: largest |grad|, random-k: a random subset) and the
/// rest a uniform random sign; one FGSM step of size epsilon follows. The
/// random signs and subset are drawn once per (input, draw) and shared by
/// every rho, so the selected sets are nested. The rate averages over
/// inputs and `draws` sign draws; stderr is over per-input rates.
std::vector<SignFractionRow> sign_fraction_experiment(const Oracle& oracle, std::span<const LabeledInput> suite,
                                                      double epsilon, std::span<const double> fractions,
                                                      SignSelection selection, std::uint64_t seed,
                                                      std::size_t draws = 1, std::size_t workers = 1);

/// Misclassification rate of a full-sign FGSM step over the suite.
double fgsm_rate(const Oracle& oracle, std::span<const LabeledInput> suite, double epsilon);

// ---------------------------------------------------------------------------
// Successive-gradient cosine along NES trajectories

struct CosineRow {
  double step_size = 0.0;
  std::size_t step_index = 0;
  double mean_cosine = 0.0;
  double stderr_ = 0.0;
};

struct SuccessiveCosineResult {
  std::vector<CosineRow> rows;
  /// cos(grad L(x_a, y_a), grad L(x_b, y_b)) for disjoint pairs of suite points.
  MeanStderr baseline;
};

/// Walks `steps` NES-PGD steps per input (estimator and ball from `config`,
/// step size overridden per entry of step_sizes, no early stop, no budget)
/// and records cos(grad L(x_t), grad L(x_{t+1})) averaged over the suite.
SuccessiveCosineResult successive_cosine_experiment(const OraclePtr& oracle, std::span<const LabeledInput> suite,
                                                    const AttackConfig& config, std::span<const double> step_sizes,
                                                    std::size_t steps, std::uint64_t seed, std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Tiling cosine

struct TilingRow {
  std::size_t tile = 1;
  double mean_cosine = 0.0;
  double stderr_ = 0.0;
};

/// cos(to_image(to_latent(g)), g) for one field; non-divisible dims are padded.
double tiling_cosine(const Vector& field, const ImageShape& shape, std::size_t tile);

/// Tiling cosine of the true gradients over the suite.
std::vector<TilingRow> tiling_cosine_experiment(const Oracle& oracle, std::span<const LabeledInput> suite,
                                                std::span<const std::size_t> tiles);

/// Same statistic over arbitrary fields.
std::vector<TilingRow> tiling_cosine_fields(std::span<const Vector> fields, const ImageShape& shape,
                                            std::span<const std::size_t> tiles);

/// Zero-mean Gaussian-blurred white noise fields (a smooth synthetic gradient suite).
std::vector<Vector> smooth_noise_fields(const ImageShape& shape, std::size_t count, std::uint64_t seed,
                                        double sigma);

// ---------------------------------------------------------------------------
// Sparsity (standard basis)

struct SparsityRow {
  std::size_t k = 0;
  double mean_mass_fraction = 0.0;
  double stderr_ = 0.0;
};

struct SparsityResult {
  std::vector<SparsityRow> rows;
  std::size_t skipped_zero = 0;
};

/// Share of squared l2 mass held by the k largest-magnitude entries.
double top_k_mass(const Vector& g, std::size_t k);

SparsityResult sparsity_mass_experiment(const Oracle& oracle, std::span<const LabeledInput> suite,
                                        std::span<const std::size_t> ks);

// ---------------------------------------------------------------------------
// NES / least-squares equivalence

struct EquivalenceRow {
  std::size_t k = 0;
  std::size_t d = 0;
  double p = 0.0;
  std::size_t trials = 0;
  double gap_q99 = 0.0;
  double bound = 0.0;
  /// Share of trials with gap > bound.
  double exceed_fraction = 0.0;
};

/// Draws `trials` unit g* and Gaussian A (rows N(0, I/d)), takes exact
/// responses y = A g*, and compares equivalence_gap with equivalence_bound.
/// gap_q99 is the nearest-rank 99th percentile.
EquivalenceRow equivalence_experiment(std::size_t k, std::size_t d, double p, std::size_t trials,
                                      std::uint64_t seed, std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Attack benchmark

struct MethodSpec {
  std::string name;
  AttackConfig config;
};

struct BenchmarkSpec {
  OraclePtr oracle;
  std::vector<LabeledInput> suite;
  std::vector<MethodSpec> methods;
  /// Method whose success set defines the intersection metric.
  std::string baseline = "nes";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct RunRecord {
  std::string method;
  std::size_t input_id = 0;
  std::uint64_t seed = 0;
  bool success = false;
  bool aborted = false;
  std::uint64_t queries = 0;
  std::size_t iterations = 0;
  AttackTrace trace;
};

struct MethodReport {
  std::string name;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double failure_rate = 0.0;
  /// Mean queries over successful runs (0 when none succeeded).
  double avg_queries_success = 0.0;
  /// Mean queries over inputs in the baseline's success set that this method also broke.
  double avg_queries_on_baseline_success = 0.0;
  std::size_t baseline_intersection = 0;
  /// Median queries over all runs, failures counted at the query cap.
  double median_queries = 0.0;
  /// (q, share of the suite broken with <= q queries), at every distinct successful q.
  std::vector<std::pair<std::uint64_t, double>> query_cdf;
  /// (success rate reached, mean queries of the cheapest successes so far).
  std::vector<std::pair<double, double>> avg_queries_by_success;
  /// Per iteration, means over runs; finished runs carry their last value forward.
  std::vector<double> mean_loss_by_iteration;
  std::vector<double> mean_cosine_by_iteration;
};

struct BenchmarkReport {
  std::vector<MethodReport> methods;
  /// All runs, ordered by method then input.
  std::vector<RunRecord> runs;
  std::vector<std::size_t> baseline_success_inputs;

  const MethodReport& method(const std::string& name) const;
};

/// Runs every method on every suite input under its query cap. Run seeds
/// are derive_seed(spec.seed, input_id) for every method.
BenchmarkReport attack_benchmark(const BenchmarkSpec& spec);

/// Reports computed from raw run rows (used by attack_benchmark, exposed for cross-checks).
MethodReport summarize_method(const std::string& name, std::span<const RunRecord> runs, std::uint64_t max_queries,
                              std::span<const std::size_t> baseline_success_inputs);

}  // namespace bb
