#include "config.hpp"

#include "blackbandit/errors.hpp"

#include <cstdlib>
#include "blackbandit/parallel.hpp"

namespace bb::cli {

namespace {

json attack_section() {
  return {
      {"method", nullptr},
      {"norm", nullptr},
      {"epsilon", nullptr},
      {"step", 0.01},
      {"max_queries", nullptr},
      {"max_iterations", 10000},
      {"clamp", true},
      {"trace_cosine", true},
      {"nes", {{"samples", 50}, {"delta", 0.01}, {"antithetic", true}}},
      {"fd", {{"delta", 1e-3}, {"scheme", "forward"}}},
      {"bandit",
       {{"eta", 100.0},
        {"h", 0.01},
        {"delta", 1.0},
        {"fd_probe", 0.1},
        {"time_prior", true},
        {"data_prior", false},
        {"tile", 2}}},
  };
}

json method_schema() {
  json s = attack_section();
  s["name"] = nullptr;
  return s;
}

std::string default_out() {
  if (const char* env = std::getenv("BLACKBANDIT_OUT"); env != nullptr && *env != '\0') return env;
  return "blackbandit-out";
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

// Lookup with the dotted name kept around for error messages.
class Reader {
 public:
  Reader(const json& node, std::string where) : node_(node), where_(std::move(where)) {}

  Reader at(const std::string& key) const {
    const std::string path = join(where_, key);
    if (!node_.is_object() || !node_.contains(key)) throw ConfigError("missing required key: " + path);
    return Reader(node_.at(key), path);
  }

  bool is_null() const { return node_.is_null(); }
  const json& node() const { return node_; }
  const std::string& where() const { return where_; }

  template <typename T>
  T as() const {
    if (node_.is_null()) throw ConfigError("missing required key: " + where_);
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (node_.is_number_float()) {
          const double v = node_.get<double>();
          if (v != std::floor(v)) throw ConfigError("key " + where_ + " must be an integer");
        }
        if (node_.is_number_integer() && node_.get<long long>() < 0)
          throw ConfigError("key " + where_ + " must be non-negative");
      }
      return node_.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("key " + where_ + " has the wrong type (" + std::string(node_.type_name()) + ")");
    }
  }

  template <typename T>
  std::vector<T> list() const {
    if (!node_.is_array()) return {as<T>()};
    std::vector<T> out;
    for (std::size_t i = 0; i < node_.size(); ++i) {
      out.push_back(Reader(node_[i], where_ + "[" + std::to_string(i) + "]").as<T>());
    }
    return out;
  }

 private:
  const json& node_;
  std::string where_;
};

template <typename Fn>
auto wrap(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

AttackConfig read_attack(const Reader& r) {
  AttackConfig c;
  c.method = wrap(r.where(), [&] { return parse_method(r.at("method").as<std::string>()); });
  c.norm = wrap(r.where(), [&] { return parse_norm(r.at("norm").as<std::string>()); });
  c.epsilon = r.at("epsilon").as<double>();
  c.step = r.at("step").as<double>();
  c.max_queries = r.at("max_queries").as<std::uint64_t>();
  c.max_iterations = r.at("max_iterations").as<std::size_t>();
  c.clamp = r.at("clamp").as<bool>();
  c.trace_cosine = r.at("trace_cosine").as<bool>();
  const Reader nes = r.at("nes");
  c.nes.samples = nes.at("samples").as<std::size_t>();
  c.nes.delta = nes.at("delta").as<double>();
  c.nes.antithetic = nes.at("antithetic").as<bool>();
  const Reader fd = r.at("fd");
  c.fd_delta = fd.at("delta").as<double>();
  const auto scheme = fd.at("scheme").as<std::string>();
  if (scheme == "forward") {
    c.fd_scheme = FiniteDifference::Forward;
  } else if (scheme == "central") {
    c.fd_scheme = FiniteDifference::Central;
  } else {
    throw ConfigError("key " + fd.where() + ".scheme must be forward or central");
  }
  const Reader b = r.at("bandit");
  c.bandit.eta_oco = b.at("eta").as<double>();
  c.bandit.h_image = b.at("h").as<double>();
  c.bandit.delta_explore = b.at("delta").as<double>();
  c.bandit.fd_probe = b.at("fd_probe").as<double>();
  c.priors.time = b.at("time_prior").as<bool>();
  c.priors.data = b.at("data_prior").as<bool>();
  c.priors.tile = b.at("tile").as<std::size_t>();
  wrap(r.where(), [&] {
    c.validate();
    return 0;
  });
  return c;
}

}  // namespace

json default_document() {
  return {
      {"seed", 0},
      {"workers", 0},
      {"out", default_out()},
      {"oracle",
       {{"kind", "mlp"},
        {"dimension", 256},
        {"num_classes", 10},
        {"seed", 7},
        {"endpoint", ""},
        {"weights", ""},
        {"shape", {16, 16, 1}},
        {"hidden", 64},
        {"filter_smoothing", 1.5}}},
      {"suite", {{"size", 100}, {"seed", 2024}, {"blur_sigma", 1.5}, {"contrast", 0.25}}},
      {"attack", attack_section()},
      {"bench",
       {{"baseline", "nes"},
        {"methods",
         json::array({
             {{"name", "nes"}, {"method", "nes"}},
             {{"name", "bandit_t"}, {"method", "bandit"}, {"bandit", {{"data_prior", false}}}},
             {{"name", "bandit_td"}, {"method", "bandit"}, {"bandit", {{"data_prior", true}}}},
         })}}},
      {"experiment",
       {{"signfrac",
         {{"epsilon", 0.05},
          {"fractions", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
          {"selection", {"top_k", "random_k"}},
          {"draws", 1}}},
        {"cosine", {{"step_sizes", {0.0025, 0.005, 0.01}}, {"steps", 10}}},
        {"tiling", {{"tiles", {1, 2, 4, 8}}, {"source", "gradient"}, {"fields", 100}, {"sigma", 1.5}}},
        {"sparsity", {{"ks", {1, 4, 16, 32, 64, 128, 256}}}},
        {"equiv", {{"k", {50}}, {"d", {1000}}, {"p", {0.05}}, {"trials", 200}}}}},
  };
}

std::vector<std::string> preset_names() { return {"desk-linf", "desk-l2", "paper-linf", "paper-l2"}; }

json preset_document(const std::string& name) {
  // Bandit values are the published ImageNet settings; desk presets shrink
  // the tile to fit 16x16 inputs and the budget to the desk benchmark cap.
  const json bandit_linf = {{"eta", 100.0}, {"h", 0.01}, {"delta", 1.0}, {"fd_probe", 0.1}};
  const json bandit_l2 = {{"eta", 0.1}, {"h", 0.5}, {"delta", 0.01}, {"fd_probe", 0.01}};
  json attack;
  if (name == "desk-linf") {
    attack = {{"norm", "linf"}, {"epsilon", 0.05}, {"step", 0.005}, {"max_queries", 2000}, {"nes", {{"samples", 50}}}};
    attack["bandit"] = bandit_linf;
    attack["bandit"]["tile"] = 2;
  } else if (name == "desk-l2") {
    attack = {{"norm", "l2"}, {"epsilon", 1.0}, {"step", 0.2}, {"max_queries", 2000}, {"nes", {{"samples", 50}}}};
    attack["bandit"] = bandit_l2;
    attack["bandit"]["tile"] = 2;
  } else if (name == "paper-linf") {
    attack = {{"norm", "linf"}, {"epsilon", 0.05}, {"step", 0.01}, {"max_queries", 10000}, {"nes", {{"samples", 100}}}};
    attack["bandit"] = bandit_linf;
    attack["bandit"]["tile"] = 6;
  } else if (name == "paper-l2") {
    attack = {{"norm", "l2"}, {"epsilon", 1.0}, {"step", 0.3}, {"max_queries", 10000}, {"nes", {{"samples", 10}}}};
    attack["bandit"] = bandit_l2;
    attack["bandit"]["tile"] = 6;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  attack["method"] = "bandit";
  attack["bandit"]["time_prior"] = true;
  attack["bandit"]["data_prior"] = true;
  return {{"attack", attack}};
}

void merge(json& target, const json& patch, const json& schema, const std::string& where) {
  if (!patch.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = join(where, key);
    if (!schema.is_object() || !schema.contains(key)) throw ConfigError("unknown config key: " + path);
    const json& sub = schema.at(key);
    if (path == "bench.methods") {
      if (!value.is_array()) throw ConfigError("bench.methods must be an array");
      const json ms = method_schema();
      for (std::size_t i = 0; i < value.size(); ++i) {
        json probe = json::object();
        merge(probe, value[i], ms, path + "[" + std::to_string(i) + "]");
      }
      target[key] = value;
    } else if (sub.is_object()) {
      if (!target.contains(key) || !target[key].is_object()) target[key] = json::object();
      merge(target[key], value, sub, path);
    } else {
      target[key] = value;
    }
  }
}

void set_key(json& target, const std::string& dotted, const json& value, const json& schema) {
  json patch = value;
  std::size_t end = dotted.size();
  while (true) {
    const std::size_t dot = dotted.rfind('.', end - 1);
    const std::string key = dotted.substr(dot == std::string::npos ? 0 : dot + 1,
                                          end - (dot == std::string::npos ? 0 : dot + 1));
    if (key.empty()) throw ConfigError("malformed key '" + dotted + "'");
    patch = json{{key, patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge(target, patch, schema);
}

json parse_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

std::string method_label(const AttackConfig& c) {
  if (c.method != Method::Bandit) return to_string(c.method);
  if (!c.priors.time) return c.priors.data ? "bandit_d" : "bandit";
  return c.priors.data ? "bandit_td" : "bandit_t";
}

Resolved resolve(const json& document, bool need_attack) {
  Resolved out;
  out.document = document;
  const Reader root(document, "");

  out.seed = root.at("seed").as<std::uint64_t>();
  out.workers = root.at("workers").as<std::size_t>();
  if (out.workers == 0) out.workers = default_workers();
  out.out = root.at("out").as<std::string>();

  const Reader o = root.at("oracle");
  out.oracle.kind = wrap("oracle.kind", [&] { return parse_oracle_kind(o.at("kind").as<std::string>()); });
  out.oracle.dimension = o.at("dimension").as<std::size_t>();
  out.oracle.num_classes = o.at("num_classes").as<std::size_t>();
  out.oracle.seed = o.at("seed").as<std::uint64_t>();
  out.oracle.endpoint = o.at("endpoint").as<std::string>();
  out.weights = o.at("weights").as<std::string>();
  const auto shape = o.at("shape").list<std::size_t>();
  if (shape.empty()) {
    out.oracle.shape.reset();
  } else if (shape.size() == 3) {
    out.oracle.shape = ImageShape{shape[0], shape[1], shape[2]};
    if (out.oracle.kind != OracleKind::Remote && out.weights.empty() &&
        out.oracle.shape->size() != out.oracle.dimension) {
      throw ConfigError("oracle.shape does not match oracle.dimension");
    }
  } else {
    throw ConfigError("oracle.shape must be [height, width, channels] or []");
  }
  out.oracle.hidden = o.at("hidden").as<std::size_t>();
  out.oracle.filter_smoothing = o.at("filter_smoothing").as<double>();
  if (out.oracle.kind == OracleKind::Remote && out.oracle.endpoint.empty()) {
    throw ConfigError("missing required key: oracle.endpoint");
  }

  const Reader s = root.at("suite");
  out.suite.size = s.at("size").as<std::size_t>();
  out.suite.seed = s.at("seed").as<std::uint64_t>();
  out.suite.blur_sigma = s.at("blur_sigma").as<double>();
  out.suite.contrast = s.at("contrast").as<double>();
  if (out.suite.size == 0) throw ConfigError("suite.size must be >= 1");

  if (need_attack) {
    out.attack = read_attack(root.at("attack"));
    out.attack_name = method_label(*out.attack);
    const Reader bench = root.at("bench");
    out.baseline = bench.at("baseline").as<std::string>();
    const Reader methods = bench.at("methods");
    for (std::size_t i = 0; i < methods.node().size(); ++i) {
      const std::string where = "bench.methods[" + std::to_string(i) + "]";
      json merged = document.at("attack");
      json entry = methods.node()[i];
      if (!entry.contains("name")) throw ConfigError("missing required key: " + where + ".name");
      const std::string name = Reader(entry["name"], where + ".name").as<std::string>();
      entry.erase("name");
      merge(merged, entry, attack_section(), where);
      for (const auto& m : out.methods) {
        if (m.name == name) throw ConfigError("duplicate method name '" + name + "'");
      }
      out.methods.push_back({name, read_attack(Reader(merged, where))});
    }
  }

  const Reader e = root.at("experiment");
  const Reader sf = e.at("signfrac");
  out.signfrac.epsilon = sf.at("epsilon").as<double>();
  out.signfrac.fractions = sf.at("fractions").list<double>();
  for (const auto& sel : sf.at("selection").list<std::string>()) {
    out.signfrac.selections.push_back(wrap(sf.where(), [&] { return parse_sign_selection(sel); }));
  }
  out.signfrac.draws = sf.at("draws").as<std::size_t>();
  const Reader cos = e.at("cosine");
  out.cosine.step_sizes = cos.at("step_sizes").list<double>();
  out.cosine.steps = cos.at("steps").as<std::size_t>();
  const Reader ti = e.at("tiling");
  out.tiling.tiles = ti.at("tiles").list<std::size_t>();
  for (std::size_t t : out.tiling.tiles) {
    if (t == 0) throw ConfigError("experiment.tiling.tiles entries must be >= 1");
  }
  out.tiling.source = ti.at("source").as<std::string>();
  if (out.tiling.source != "gradient" && out.tiling.source != "smooth_noise") {
    throw ConfigError("experiment.tiling.source must be gradient or smooth_noise");
  }
  out.tiling.fields = ti.at("fields").as<std::size_t>();
  out.tiling.sigma = ti.at("sigma").as<double>();
  out.sparsity_ks = e.at("sparsity").at("ks").list<std::size_t>();
  const Reader eq = e.at("equiv");
  out.equiv.k = eq.at("k").list<std::size_t>();
  out.equiv.d = eq.at("d").list<std::size_t>();
  out.equiv.p = eq.at("p").list<double>();
  out.equiv.trials = eq.at("trials").as<std::size_t>();
  return out;
}

OraclePtr build_oracle(const Resolved& config) {
  if (!config.weights.empty()) return load_weights_file(config.weights);
  return make_oracle(config.oracle);
}

}  // namespace bb::cli
