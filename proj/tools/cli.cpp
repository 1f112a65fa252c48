#include "cli.hpp"

#include "config.hpp"

#include "blackbandit/csv.hpp"
#include "blackbandit/errors.hpp"
#include "blackbandit/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace bb::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kExperimentKinds = {"signfrac", "cosine", "tiling", "sparsity", "bench",
                                                   "nes-lsq-equiv"};

// Flags that map onto one config key. List flags take comma-separated values.
struct KeyFlag {
  const char* flag;
  const char* key;
  const char* help;
  bool list = false;
};

const std::vector<KeyFlag> kCommonFlags = {
    {"--seed", "seed", "Run seed"},
    {"--out", "out", "Output directory (default $BLACKBANDIT_OUT)"},
    {"--workers", "workers", "Worker threads (0 = available parallelism)"},
    {"--oracle", "oracle.kind", "linear | quadratic | softmax | mlp | remote"},
    {"--endpoint", "oracle.endpoint", "Remote oracle host:port"},
    {"--weights", "oracle.weights", "Weights file (overrides the seeded oracle)"},
    {"--oracle-seed", "oracle.seed", "Seed of the built-in oracle"},
    {"--suite-size", "suite.size", "Number of suite inputs"},
    {"--suite-seed", "suite.seed", "Suite seed"},
};

const std::vector<KeyFlag> kAttackFlags = {
    {"--method", "attack.method", "whitebox | coordinate_fd | nes | bandit"},
    {"--norm", "attack.norm", "linf | l2"},
    {"--epsilon", "attack.epsilon", "Perturbation budget"},
    {"--step", "attack.step", "Image step for whitebox / fd / nes"},
    {"--max-queries", "attack.max_queries", "Loss-query budget per run"},
    {"--nes-samples", "attack.nes.samples", "NES probes per estimate"},
    {"--nes-delta", "attack.nes.delta", "NES smoothing radius"},
    {"--fd-delta", "attack.fd.delta", "Finite-difference step"},
    {"--eta", "attack.bandit.eta", "Bandit latent learning rate"},
    {"--bandit-h", "attack.bandit.h", "Bandit image step"},
    {"--explore", "attack.bandit.delta", "Bandit exploration radius"},
    {"--fd-probe", "attack.bandit.fd_probe", "Bandit finite-difference probe"},
    {"--time-prior", "attack.bandit.time_prior", "true | false"},
    {"--data-prior", "attack.bandit.data_prior", "true | false"},
    {"--tile", "attack.bandit.tile", "Tile side in pixels"},
};

const std::vector<KeyFlag> kExperimentFlags = {
    {"--fractions", "experiment.signfrac.fractions", "Sign fractions", true},
    {"--selection", "experiment.signfrac.selection", "top_k,random_k", true},
    {"--draws", "experiment.signfrac.draws", "Sign draws per input"},
    {"--sign-epsilon", "experiment.signfrac.epsilon", "FGSM epsilon"},
    {"--step-sizes", "experiment.cosine.step_sizes", "NES step sizes", true},
    {"--steps", "experiment.cosine.steps", "Steps per trajectory"},
    {"--tiles", "experiment.tiling.tiles", "Tile sides", true},
    {"--source", "experiment.tiling.source", "gradient | smooth_noise"},
    {"--ks", "experiment.sparsity.ks", "Top-k sizes", true},
    {"--k", "experiment.equiv.k", "Probe counts", true},
    {"--d", "experiment.equiv.d", "Dimensions", true},
    {"--p", "experiment.equiv.p", "Failure probabilities", true},
    {"--trials", "experiment.equiv.trials", "Trials per row"},
};

struct Common {
  std::string config_file;
  std::string preset;
  std::vector<std::string> sets;
  std::map<std::string, std::string> keys;
  std::map<std::string, bool> list_keys;
};

void add_key_flags(CLI::App* cmd, Common& common, const std::vector<KeyFlag>& flags) {
  for (const auto& f : flags) {
    common.list_keys[f.key] = f.list;
    cmd->add_option_function<std::string>(
        f.flag, [&common, key = std::string(f.key)](const std::string& v) { common.keys[key] = v; }, f.help);
  }
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_file, "JSON config file");
  cmd->add_option("--preset", common.preset, "desk-linf | desk-l2 | paper-linf | paper-l2");
  cmd->add_option("--set", common.sets, "KEY=VALUE override (repeatable)");
  add_key_flags(cmd, common, kCommonFlags);
}

json list_value(const std::string& text) {
  json arr = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) arr.push_back(parse_value(item));
  }
  return arr;
}

// defaults < preset < config file < flags
json build_document(const Common& common) {
  const json schema = default_document();
  json doc = schema;
  if (!common.preset.empty()) merge(doc, preset_document(common.preset), schema);
  if (!common.config_file.empty()) {
    std::ifstream in(common.config_file);
    if (!in) throw ConfigError("cannot read config file " + common.config_file);
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) throw ConfigError("config file " + common.config_file + " is not valid JSON");
    merge(doc, file, schema);
  }
  for (const auto& [key, value] : common.keys) {
    const auto it = common.list_keys.find(key);
    const bool is_list = it != common.list_keys.end() && it->second;
    set_key(doc, key, is_list ? list_value(value) : parse_value(value), schema);
  }
  for (const auto& kv : common.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    set_key(doc, kv.substr(0, eq), parse_value(kv.substr(eq + 1)), schema);
  }
  return doc;
}

void write_resolved(const Resolved& cfg) {
  csv::write_file(cfg.out / "resolved.json", [&](std::ostream& os) { os << cfg.document.dump(2) << '\n'; });
}

std::vector<RunRecord> run_suite(const OraclePtr& oracle, const std::vector<LabeledInput>& suite,
                                 const AttackConfig& config, const std::string& name, std::uint64_t seed,
                                 std::size_t workers) {
  std::vector<RunRecord> runs(suite.size());
  parallel_for(suite.size(), workers, [&](std::size_t i) {
    RunRecord& rec = runs[i];
    rec.method = name;
    rec.input_id = i;
    rec.seed = derive_seed(seed, i);
    Rng rng(rec.seed);
    AttackResult result = run_attack(oracle, suite[i], config, rng);
    rec.success = result.outcome.success;
    rec.aborted = result.outcome.aborted;
    rec.queries = result.outcome.queries_used;
    rec.iterations = result.outcome.iterations;
    rec.trace = std::move(result.trace);
  });
  return runs;
}

bool any_aborted(const std::vector<RunRecord>& runs, std::ostream& err) {
  for (const auto& r : runs) {
    if (r.aborted) {
      err << "error: oracle transport failed during " << r.method << " run on input " << r.input_id << '\n';
      return true;
    }
  }
  return false;
}

int cmd_attack(const Common& common, std::ostream& out, std::ostream& err) {
  const Resolved cfg = resolve(build_document(common), true);
  const OraclePtr oracle = build_oracle(cfg);
  const auto suite = make_suite(*oracle, cfg.suite);
  write_resolved(cfg);
  const auto runs = run_suite(oracle, suite, *cfg.attack, cfg.attack_name, cfg.seed, cfg.workers);
  csv::write_file(cfg.out / "attacks.csv", [&](std::ostream& os) { csv::write_attacks(os, runs); });
  csv::write_file(cfg.out / "trace.csv", [&](std::ostream& os) { csv::write_trace(os, runs); });
  const MethodReport m = summarize_method(cfg.attack_name, runs, cfg.attack->max_queries, {});
  out << cfg.attack_name << ": " << m.successes << "/" << m.runs << " succeeded, median queries "
      << csv::format_double(m.median_queries) << ", avg queries on success "
      << csv::format_double(m.avg_queries_success) << '\n';
  return any_aborted(runs, err) ? kTransportError : kOk;
}

int cmd_experiment(const std::string& kind, Common common, std::ostream& out, std::ostream& err) {
  json doc = build_document(common);
  const bool needs_attack = kind == "bench" || kind == "cosine";
  if (kind == "cosine") doc["attack"]["method"] = "nes";
  const Resolved cfg = resolve(doc, needs_attack);
  const fs::path dir = cfg.out;

  if (kind == "nes-lsq-equiv") {
    write_resolved(cfg);
    std::vector<EquivalenceRow> rows;
    for (std::size_t k : cfg.equiv.k) {
      for (std::size_t d : cfg.equiv.d) {
        for (double p : cfg.equiv.p) {
          rows.push_back(equivalence_experiment(k, d, p, cfg.equiv.trials, cfg.seed, cfg.workers));
          const auto& r = rows.back();
          out << "k=" << k << " d=" << d << " p=" << csv::format_double(p) << ": gap_q99 "
              << csv::format_double(r.gap_q99) << " bound " << csv::format_double(r.bound) << " exceed "
              << csv::format_double(r.exceed_fraction) << '\n';
        }
      }
    }
    csv::write_file(dir / "equiv.csv", [&](std::ostream& os) { csv::write_equivalence(os, rows); });
    return kOk;
  }

  const OraclePtr oracle = build_oracle(cfg);
  if (kind == "tiling" && cfg.tiling.source == "smooth_noise") {
    const ImageShape shape = oracle->shape().value_or(cfg.oracle.shape.value_or(ImageShape{1, oracle->dimension(), 1}));
    write_resolved(cfg);
    const auto fields = smooth_noise_fields(shape, cfg.tiling.fields, cfg.seed, cfg.tiling.sigma);
    const auto rows = tiling_cosine_fields(fields, shape, cfg.tiling.tiles);
    csv::write_file(dir / "tiling.csv", [&](std::ostream& os) { csv::write_tiling(os, rows); });
    return kOk;
  }

  const auto suite = make_suite(*oracle, cfg.suite);
  write_resolved(cfg);
  if (kind == "signfrac") {
    std::vector<SignFractionRow> rows;
    for (SignSelection sel : cfg.signfrac.selections) {
      auto part = sign_fraction_experiment(*oracle, suite, cfg.signfrac.epsilon, cfg.signfrac.fractions, sel,
                                           cfg.seed, cfg.signfrac.draws, cfg.workers);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    csv::write_file(dir / "signexp.csv", [&](std::ostream& os) { csv::write_sign_fraction(os, rows); });
  } else if (kind == "cosine") {
    const auto result = successive_cosine_experiment(oracle, suite, *cfg.attack, cfg.cosine.step_sizes,
                                                     cfg.cosine.steps, cfg.seed, cfg.workers);
    csv::write_file(dir / "cosine.csv", [&](std::ostream& os) { csv::write_cosine(os, result.rows); });
    csv::write_file(dir / "cosine_baseline.csv",
                    [&](std::ostream& os) { csv::write_cosine_baseline(os, result.baseline); });
  } else if (kind == "tiling") {
    const auto rows = tiling_cosine_experiment(*oracle, suite, cfg.tiling.tiles);
    csv::write_file(dir / "tiling.csv", [&](std::ostream& os) { csv::write_tiling(os, rows); });
  } else if (kind == "sparsity") {
    const auto result = sparsity_mass_experiment(*oracle, suite, cfg.sparsity_ks);
    if (result.skipped_zero > 0) err << "skipped " << result.skipped_zero << " zero gradients\n";
    csv::write_file(dir / "sparsity.csv", [&](std::ostream& os) { csv::write_sparsity(os, result.rows); });
  } else if (kind == "bench") {
    BenchmarkSpec spec{oracle, suite, cfg.methods, cfg.baseline, cfg.seed, cfg.workers};
    const auto report = attack_benchmark(spec);
    csv::write_file(dir / "attacks.csv", [&](std::ostream& os) { csv::write_attacks(os, report.runs); });
    csv::write_file(dir / "trace.csv", [&](std::ostream& os) { csv::write_trace(os, report.runs); });
    csv::write_file(dir / "summary.csv", [&](std::ostream& os) { csv::write_summary(os, report.methods); });
    csv::write_file(dir / "query_cdf.csv", [&](std::ostream& os) { csv::write_query_cdf(os, report.methods); });
    csv::write_file(dir / "avgq_by_success.csv",
                    [&](std::ostream& os) { csv::write_avg_queries_by_success(os, report.methods); });
    csv::write_file(dir / "loss_curve.csv", [&](std::ostream& os) { csv::write_curves(os, report.methods); });
    for (const auto& m : report.methods) {
      out << m.name << ": " << m.successes << "/" << m.runs << " succeeded, median queries "
          << csv::format_double(m.median_queries) << '\n';
    }
    if (any_aborted(report.runs, err)) return kTransportError;
  }
  return kOk;
}

int cmd_export(const Common& common, const std::string& to, std::ostream& out) {
  const Resolved cfg = resolve(build_document(common), false);
  const OraclePtr oracle = build_oracle(cfg);
  const std::string text = weights_document(*oracle).dump(2) + "\n";
  if (to.empty() || to == "-") {
    out << text;
  } else {
    csv::write_file(to, [&](std::ostream& os) { os << text; });
  }
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query-counted black-box gradient estimation and adversarial attacks", "blackbandit"};
  app.require_subcommand(1);

  Common attack_opts;
  CLI::App* attack = app.add_subcommand("attack", "Run one attack configuration over the input suite");
  add_common(attack, attack_opts);
  add_key_flags(attack, attack_opts, kAttackFlags);

  Common exp_opts;
  std::string kind;
  CLI::App* experiment = app.add_subcommand("experiment", "Run a measurement experiment");
  experiment->add_option("kind", kind, "signfrac | cosine | tiling | sparsity | bench | nes-lsq-equiv")->required();
  add_common(experiment, exp_opts);
  add_key_flags(experiment, exp_opts, kAttackFlags);
  add_key_flags(experiment, exp_opts, kExperimentFlags);

  Common export_opts;
  std::string to;
  CLI::App* exporter = app.add_subcommand("export-weights", "Write a weights file for the configured oracle");
  add_common(exporter, export_opts);
  exporter->add_option("--to", to, "Destination file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (attack->parsed()) return cmd_attack(attack_opts, out, err);
    if (experiment->parsed()) {
      if (std::find(kExperimentKinds.begin(), kExperimentKinds.end(), kind) == kExperimentKinds.end()) {
        err << "error: unknown experiment kind '" << kind << "'\n";
        return kConfigError;
      }
      return cmd_experiment(kind, exp_opts, out, err);
    }
    return cmd_export(export_opts, to, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TransportError& e) {
    err << "error: " << e.what() << '\n';
    return kTransportError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace bb::cli
