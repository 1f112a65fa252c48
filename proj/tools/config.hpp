#pragma once

#include "blackbandit/attack.hpp"
#include "blackbandit/experiments.hpp"
#include "blackbandit/oracle.hpp"
#include "blackbandit/suite.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bb::cli {

using nlohmann::json;

/// Every accepted key with its default. A null default marks a key that
/// must come from a preset, the config file or a flag.
json default_document();

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
json preset_document(const std::string& name);

/// Recursively overlays `patch` onto `target`. Keys missing from `schema`
/// raise ConfigError naming the dotted path; arrays replace wholesale.
void merge(json& target, const json& patch, const json& schema, const std::string& where = "");

/// Sets a dotted key ("attack.nes.samples") after checking it exists in the schema.
void set_key(json& target, const std::string& dotted, const json& value, const json& schema);

/// Parses an override value: JSON when it parses, otherwise a plain string.
json parse_value(const std::string& text);

struct SignFractionParams {
  double epsilon = 0.05;
  std::vector<double> fractions;
  std::vector<SignSelection> selections;
  std::size_t draws = 1;
};

struct CosineParams {
  std::vector<double> step_sizes;
  std::size_t steps = 10;
};

struct TilingParams {
  std::vector<std::size_t> tiles;
  /// "gradient": true gradients over the suite; "smooth_noise": blurred noise fields.
  std::string source = "gradient";
  std::size_t fields = 100;
  double sigma = 1.5;
};

struct EquivalenceParams {
  std::vector<std::size_t> k;
  std::vector<std::size_t> d;
  std::vector<double> p;
  std::size_t trials = 200;
};

struct Resolved {
  json document;
  OracleDescriptor oracle;
  /// Weights file; wins over the descriptor when set.
  std::string weights;
  SuiteSpec suite;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out;

  std::optional<AttackConfig> attack;
  std::string attack_name;
  std::vector<MethodSpec> methods;
  std::string baseline;

  SignFractionParams signfrac;
  CosineParams cosine;
  TilingParams tiling;
  std::vector<std::size_t> sparsity_ks;
  EquivalenceParams equiv;
};

/// Converts a merged document. `need_attack` enforces the required attack
/// keys (missing ones raise ConfigError naming the key).
Resolved resolve(const json& document, bool need_attack);

/// Name used in CSVs for a single configured attack (nes, bandit_t, ...).
std::string method_label(const AttackConfig& config);

OraclePtr build_oracle(const Resolved& config);

}  // namespace bb::cli
