#include "blackbandit/experiments.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/estimators.hpp"
#include "blackbandit/geometry.hpp"
#include "blackbandit/image.hpp"
#include "blackbandit/parallel.hpp"
#include "blackbandit/rng.hpp"
#include "blackbandit/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bb {

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  out.count = values.size();
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

namespace {

void require_suite(std::span<const LabeledInput> suite) {
  if (suite.empty()) throw InvalidArgument("experiment needs a non-empty suite");
}

void require_diagnostics(const Oracle& oracle) {
  if (!oracle.has_gradient()) throw Unsupported("experiment needs an oracle with analytic gradients");
}

int classify(const Oracle& oracle, const Vector& x) {
  return oracle.top_classes(std::span<const Vector>(&x, 1)).front();
}

std::vector<std::size_t> magnitude_order(const Vector& g) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&g](std::size_t a, std::size_t b) {
    return std::abs(g[static_cast<Eigen::Index>(a)]) > std::abs(g[static_cast<Eigen::Index>(b)]);
  });
  return idx;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(SignSelection selection) {
  return selection == SignSelection::TopK ? "top_k" : "random_k";
}

SignSelection parse_sign_selection(const std::string& text) {
  if (text == "top_k" || text == "top-k" || text == "topk") return SignSelection::TopK;
  if (text == "random_k" || text == "random-k" || text == "randomk") return SignSelection::RandomK;
  throw InvalidArgument("unknown sign selection '" + text + "'");
}

double fgsm_rate(const Oracle& oracle, std::span<const LabeledInput> suite, double epsilon) {
  require_suite(suite);
  require_diagnostics(oracle);
  std::size_t hits = 0;
  for (const auto& in : suite) {
    const Vector& x = in.point.data;
    const Vector adv = fgsm_step(x, boundary_project(oracle.gradient(x, in.label), Norm::Linf), epsilon);
    if (classify(oracle, adv) != in.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(suite.size());
}

std::vector<SignFractionRow> sign_fraction_experiment(const Oracle& oracle, std::span<const LabeledInput> suite,
                                                      double epsilon, std::span<const double> fractions,
                                                      SignSelection selection, std::uint64_t seed,
                                                      std::size_t draws, std::size_t workers) {
  require_suite(suite);
  require_diagnostics(oracle);
  if (draws == 0) throw InvalidArgument("sign-fraction experiment needs at least one draw");
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("sign fractions must lie in [0, 1]");
  }
  // rates[i][j]: share of draws where input i is misclassified at fraction j.
  std::vector<std::vector<double>> rates(suite.size(), std::vector<double>(fractions.size(), 0.0));
  parallel_for(suite.size(), workers, [&](std::size_t i) {
    const auto& in = suite[i];
    const Vector& x = in.point.data;
    const auto d = static_cast<std::size_t>(x.size());
    const Vector g = oracle.gradient(x, in.label);
    const Vector true_sign = boundary_project(g, Norm::Linf);
    Rng rng(derive_seed(seed, i));
    std::vector<std::size_t> order = magnitude_order(g);
    for (std::size_t draw = 0; draw < draws; ++draw) {
      Vector random_sign(static_cast<Eigen::Index>(d));
      for (Eigen::Index c = 0; c < random_sign.size(); ++c) random_sign[c] = rng.sign();
      if (selection == SignSelection::RandomK) std::shuffle(order.begin(), order.end(), rng.engine());
      for (std::size_t j = 0; j < fractions.size(); ++j) {
        const auto m = static_cast<std::size_t>(std::llround(fractions[j] * static_cast<double>(d)));
        Vector s = random_sign;
        for (std::size_t r = 0; r < m; ++r) {
          const auto c = static_cast<Eigen::Index>(order[r]);
          s[c] = true_sign[c];
        }
        if (classify(oracle, fgsm_step(x, s, epsilon)) != in.label) rates[i][j] += 1.0;
      }
    }
    for (double& r : rates[i]) r /= static_cast<double>(draws);
  });

  std::vector<SignFractionRow> rows;
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    std::vector<double> column(suite.size());
    for (std::size_t i = 0; i < suite.size(); ++i) column[i] = rates[i][j];
    const auto ms = mean_stderr(column);
    rows.push_back({selection, fractions[j], ms.mean, ms.stderr_});
  }
  return rows;
}

// ---------------------------------------------------------------------------

SuccessiveCosineResult successive_cosine_experiment(const OraclePtr& oracle, std::span<const LabeledInput> suite,
                                                    const AttackConfig& config, std::span<const double> step_sizes,
                                                    std::size_t steps, std::uint64_t seed, std::size_t workers) {
  require_suite(suite);
  require_diagnostics(*oracle);
  if (steps == 0) throw InvalidArgument("successive-cosine experiment needs at least one step");
  for (double s : step_sizes) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("step sizes must be >= 0");
  }
  // cosines[s][i][t]
  std::vector<std::vector<std::vector<double>>> cosines(
      step_sizes.size(), std::vector<std::vector<double>>(suite.size(), std::vector<double>(steps)));
  parallel_for(step_sizes.size() * suite.size(), workers, [&](std::size_t task) {
    const std::size_t si = task / suite.size();
    const std::size_t i = task % suite.size();
    const auto& in = suite[i];
    const Vector& x0 = in.point.data;
    OracleHandle handle(oracle);
    Rng rng(derive_seed(seed, i));
    Vector x = x0;
    Vector grad = oracle->gradient(x, in.label);
    for (std::size_t t = 0; t < steps; ++t) {
      const LabeledInput current{Point(x, in.point.shape), in.label};
      const Vector est = nes_estimate(handle, current, config.nes, rng).first.raw;
      if (!(config.norm == Norm::L2 && est.norm() == 0.0)) {
        x = ball_project(x + step_sizes[si] * boundary_project(est, config.norm), x0, config.epsilon, config.norm,
                         config.clamp);
      }
      const Vector next = oracle->gradient(x, in.label);
      cosines[si][i][t] = cosine(grad, next);
      grad = next;
    }
  });

  SuccessiveCosineResult out;
  for (std::size_t si = 0; si < step_sizes.size(); ++si) {
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> column(suite.size());
      for (std::size_t i = 0; i < suite.size(); ++i) column[i] = cosines[si][i][t];
      const auto ms = mean_stderr(column);
      out.rows.push_back({step_sizes[si], t + 1, ms.mean, ms.stderr_});
    }
  }
  std::vector<double> pairs;
  for (std::size_t i = 0; i + 1 < suite.size(); i += 2) {
    const Vector ga = oracle->gradient(suite[i].point.data, suite[i].label);
    const Vector gb = oracle->gradient(suite[i + 1].point.data, suite[i + 1].label);
    pairs.push_back(cosine(ga, gb));
  }
  out.baseline = mean_stderr(pairs);
  return out;
}

// ---------------------------------------------------------------------------

double tiling_cosine(const Vector& field, const ImageShape& shape, std::size_t tile) {
  const PaddedTiling tiling(shape, tile);
  return cosine(tiling.to_image(tiling.to_latent(field)), field);
}

std::vector<TilingRow> tiling_cosine_fields(std::span<const Vector> fields, const ImageShape& shape,
                                            std::span<const std::size_t> tiles) {
  if (fields.empty()) throw InvalidArgument("tiling cosine needs at least one field");
  std::vector<TilingRow> rows;
  for (std::size_t tile : tiles) {
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto& f : fields) values.push_back(tiling_cosine(f, shape, tile));
    const auto ms = mean_stderr(values);
    rows.push_back({tile, ms.mean, ms.stderr_});
  }
  return rows;
}

std::vector<TilingRow> tiling_cosine_experiment(const Oracle& oracle, std::span<const LabeledInput> suite,
                                                std::span<const std::size_t> tiles) {
  require_suite(suite);
  require_diagnostics(oracle);
  const auto shape = oracle.shape();
  if (!shape) throw InvalidArgument("tiling experiment needs an image-shaped oracle");
  std::vector<Vector> grads;
  grads.reserve(suite.size());
  for (const auto& in : suite) grads.push_back(oracle.gradient(in.point.data, in.label));
  return tiling_cosine_fields(grads, *shape, tiles);
}

std::vector<Vector> smooth_noise_fields(const ImageShape& shape, std::size_t count, std::uint64_t seed,
                                        double sigma) {
  std::vector<Vector> fields;
  fields.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    Vector f = gaussian_blur(rng.gaussian(shape.size()), shape, sigma);
    fields.push_back(f.array() - f.mean());
  }
  return fields;
}

// ---------------------------------------------------------------------------

double top_k_mass(const Vector& g, std::size_t k) {
  const double total = g.squaredNorm();
  if (total == 0.0) throw InvalidArgument("top_k_mass of a zero vector");
  std::vector<double> sq(static_cast<std::size_t>(g.size()));
  for (Eigen::Index i = 0; i < g.size(); ++i) sq[static_cast<std::size_t>(i)] = g[i] * g[i];
  k = std::min(k, sq.size());
  std::partial_sort(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(k), sq.end(), std::greater<>());
  const double top = std::accumulate(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return k == sq.size() ? 1.0 : top / total;
}

SparsityResult sparsity_mass_experiment(const Oracle& oracle, std::span<const LabeledInput> suite,
                                        std::span<const std::size_t> ks) {
  require_suite(suite);
  require_diagnostics(oracle);
  SparsityResult out;
  std::vector<Vector> grads;
  for (const auto& in : suite) {
    Vector g = oracle.gradient(in.point.data, in.label);
    if (g.squaredNorm() == 0.0) {
      ++out.skipped_zero;
      continue;
    }
    grads.push_back(std::move(g));
  }
  for (std::size_t k : ks) {
    std::vector<double> values;
    values.reserve(grads.size());
    for (const auto& g : grads) values.push_back(top_k_mass(g, k));
    const auto ms = mean_stderr(values);
    out.rows.push_back({k, ms.mean, ms.stderr_});
  }
  return out;
}

// ---------------------------------------------------------------------------

EquivalenceRow equivalence_experiment(std::size_t k, std::size_t d, double p, std::size_t trials,
                                      std::uint64_t seed, std::size_t workers) {
  if (trials == 0) throw InvalidArgument("equivalence experiment needs at least one trial");
  if (k == 0 || d == 0) throw InvalidArgument("equivalence experiment needs k, d >= 1");
  EquivalenceRow row{k, d, p, trials, 0.0, equivalence_bound({k, d, p}), 0.0};
  std::vector<double> gaps(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    Vector g = rng.gaussian(d);
    g.normalize();
    ProbeMatrix probe;
    probe.rows.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index r = 0; r < probe.rows.rows(); ++r) probe.rows.row(r) = rng.gaussian(d, stddev).transpose();
    probe.responses = probe.rows * g;
    gaps[t] = equivalence_gap(g, probe);
  });
  std::size_t exceed = 0;
  for (double gap : gaps) exceed += gap > row.bound ? 1 : 0;
  row.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(trials);
  std::sort(gaps.begin(), gaps.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(trials)));
  row.gap_q99 = gaps[std::max<std::size_t>(rank, 1) - 1];
  return row;
}

// ---------------------------------------------------------------------------

const MethodReport& BenchmarkReport::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.name == name) return m;
  }
  throw InvalidArgument("no method named '" + name + "' in the report");
}

MethodReport summarize_method(const std::string& name, std::span<const RunRecord> runs, std::uint64_t max_queries,
                              std::span<const std::size_t> baseline_success_inputs) {
  MethodReport m;
  m.name = name;
  m.runs = runs.size();
  std::vector<double> all_queries;
  std::vector<std::uint64_t> success_queries;
  double on_baseline = 0.0;
  for (const auto& r : runs) {
    all_queries.push_back(r.success ? static_cast<double>(r.queries) : static_cast<double>(max_queries));
    if (!r.success) continue;
    success_queries.push_back(r.queries);
    if (std::binary_search(baseline_success_inputs.begin(), baseline_success_inputs.end(), r.input_id)) {
      on_baseline += static_cast<double>(r.queries);
      ++m.baseline_intersection;
    }
  }
  m.successes = success_queries.size();
  const double n = static_cast<double>(std::max<std::size_t>(m.runs, 1));
  m.success_rate = static_cast<double>(m.successes) / n;
  m.failure_rate = 1.0 - m.success_rate;
  if (m.successes > 0) {
    m.avg_queries_success =
        std::accumulate(success_queries.begin(), success_queries.end(), 0.0) / static_cast<double>(m.successes);
  }
  if (m.baseline_intersection > 0) m.avg_queries_on_baseline_success = on_baseline / static_cast<double>(m.baseline_intersection);

  if (!all_queries.empty()) {
    std::sort(all_queries.begin(), all_queries.end());
    const std::size_t mid = all_queries.size() / 2;
    m.median_queries = all_queries.size() % 2 == 1 ? all_queries[mid] : 0.5 * (all_queries[mid - 1] + all_queries[mid]);
  }

  std::sort(success_queries.begin(), success_queries.end());
  double running = 0.0;
  for (std::size_t i = 0; i < success_queries.size(); ++i) {
    running += static_cast<double>(success_queries[i]);
    const double rate = static_cast<double>(i + 1) / n;
    m.avg_queries_by_success.emplace_back(rate, running / static_cast<double>(i + 1));
    if (i + 1 == success_queries.size() || success_queries[i + 1] != success_queries[i]) {
      m.query_cdf.emplace_back(success_queries[i], rate);
    }
  }

  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.trace.records.size());
  m.mean_loss_by_iteration.assign(longest, 0.0);
  m.mean_cosine_by_iteration.assign(longest, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 0; t < longest; ++t) {
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    double cos_sum = 0.0;
    std::size_t cos_n = 0;
    for (const auto& r : runs) {
      const auto& rec = r.trace.records;
      if (rec.empty()) continue;
      const auto& last = rec[std::min(t, rec.size() - 1)];
      loss_sum += last.loss;
      ++loss_n;
      if (!std::isnan(last.cosine)) {
        cos_sum += last.cosine;
        ++cos_n;
      }
    }
    if (loss_n > 0) m.mean_loss_by_iteration[t] = loss_sum / static_cast<double>(loss_n);
    if (cos_n > 0) m.mean_cosine_by_iteration[t] = cos_sum / static_cast<double>(cos_n);
  }
  return m;
}

BenchmarkReport attack_benchmark(const BenchmarkSpec& spec) {
  if (!spec.oracle) throw InvalidArgument("benchmark needs an oracle");
  require_suite(spec.suite);
  if (spec.methods.empty()) throw InvalidArgument("benchmark needs at least one method");
  for (const auto& m : spec.methods) m.config.validate();

  const std::size_t n = spec.suite.size();
  BenchmarkReport report;
  report.runs.resize(spec.methods.size() * n);
  parallel_for(report.runs.size(), spec.workers, [&](std::size_t task) {
    const auto& method = spec.methods[task / n];
    const std::size_t i = task % n;
    RunRecord& rec = report.runs[task];
    rec.method = method.name;
    rec.input_id = i;
    rec.seed = derive_seed(spec.seed, i);
    Rng rng(rec.seed);
    AttackResult result = run_attack(spec.oracle, spec.suite[i], method.config, rng);
    rec.success = result.outcome.success;
    rec.aborted = result.outcome.aborted;
    rec.queries = result.outcome.queries_used;
    rec.iterations = result.outcome.iterations;
    rec.trace = std::move(result.trace);
  });

  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    if (spec.methods[mi].name != spec.baseline) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (report.runs[mi * n + i].success) report.baseline_success_inputs.push_back(i);
    }
  }
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const std::span<const RunRecord> rows(report.runs.data() + mi * n, n);
    report.methods.push_back(summarize_method(spec.methods[mi].name, rows, spec.methods[mi].config.max_queries,
                                              report.baseline_success_inputs));
  }
  return report;
}

}  // namespace bb
