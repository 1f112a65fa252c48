#include "blackbandit/oracle.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/image.hpp"
#include "blackbandit/remote_oracle.hpp"
#include "blackbandit/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>

namespace bb {

using nlohmann::json;

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::Linear: return "linear";
    case OracleKind::Quadratic: return "quadratic";
    case OracleKind::Softmax: return "softmax";
    case OracleKind::Mlp: return "mlp";
    case OracleKind::Remote: return "remote";
  }
  return "unknown";
}

OracleKind parse_oracle_kind(const std::string& text) {
  if (text == "linear") return OracleKind::Linear;
  if (text == "quadratic") return OracleKind::Quadratic;
  if (text == "softmax") return OracleKind::Softmax;
  if (text == "mlp") return OracleKind::Mlp;
  if (text == "remote") return OracleKind::Remote;
  throw InvalidArgument("unknown oracle kind '" + text + "'");
}

// ---------------------------------------------------------------------------
// Oracle

void Oracle::check_point(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dimension()) {
    throw DimensionMismatch("point has dimension " + std::to_string(x.size()) +
                            ", oracle expects " + std::to_string(dimension()));
  }
}

void Oracle::check_label(int label) const {
  if (is_classifier() && (label < 0 || static_cast<std::size_t>(label) >= num_classes())) {
    throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(num_classes()) + ")");
  }
}

std::vector<double> Oracle::losses(std::span<const Vector> points, int label) const {
  if (points.empty()) throw InvalidArgument("empty loss batch");
  for (const auto& x : points) check_point(x);
  check_label(label);
  auto out = compute_losses(points, label);
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericalError("oracle returned a non-finite loss");
  }
  return out;
}

std::vector<int> Oracle::top_classes(std::span<const Vector> points) const {
  if (!is_classifier()) throw Unsupported(to_string(kind()) + " oracle is not a classifier");
  if (points.empty()) throw InvalidArgument("empty classification batch");
  for (const auto& x : points) check_point(x);
  return compute_top_classes(points);
}

Vector Oracle::gradient(const Vector& x, int label) const {
  if (!has_gradient()) throw Unsupported("gradient not available for this oracle");
  check_point(x);
  check_label(label);
  return compute_gradient(x, label);
}

std::vector<int> Oracle::compute_top_classes(std::span<const Vector>) const {
  throw Unsupported("oracle is not a classifier");
}

Vector Oracle::compute_gradient(const Vector&, int) const {
  throw Unsupported("gradient not available for this oracle");
}

// ---------------------------------------------------------------------------
// Built-ins

LinearOracle::LinearOracle(Vector coefficients) : c_(std::move(coefficients)) {
  if (c_.size() == 0) throw InvalidArgument("linear oracle needs at least one coefficient");
}

std::vector<double> LinearOracle::compute_losses(std::span<const Vector> points, int) const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(c_.dot(x));
  return out;
}

Vector LinearOracle::compute_gradient(const Vector&, int) const { return c_; }

QuadraticOracle::QuadraticOracle(Vector center) : center_(std::move(center)) {
  if (center_.size() == 0) throw InvalidArgument("quadratic oracle needs a non-empty center");
}

std::vector<double> QuadraticOracle::compute_losses(std::span<const Vector> points, int) const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(0.5 * (x - center_).squaredNorm());
  return out;
}

Vector QuadraticOracle::compute_gradient(const Vector& x, int) const { return x - center_; }

namespace {

int argmax_lowest(const Vector& z) {
  int best = 0;
  for (Eigen::Index i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = static_cast<int>(i);
  }
  return best;
}

double log_sum_exp(const Vector& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace

std::vector<double> ClassifierOracle::compute_losses(std::span<const Vector> points, int label) const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    const Vector z = logits(x);
    if (!z.allFinite()) throw NumericalError("classifier produced non-finite logits");
    out.push_back(log_sum_exp(z) - z[label]);
  }
  return out;
}

std::vector<int> ClassifierOracle::compute_top_classes(std::span<const Vector> points) const {
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(argmax_lowest(logits(x)));
  return out;
}

Vector ClassifierOracle::compute_gradient(const Vector& x, int label) const {
  const Vector z = logits(x);
  Vector p = (z.array() - z.maxCoeff()).exp();
  p /= p.sum();
  p[label] -= 1.0;
  return logits_vjp(x, p);
}

SoftmaxOracle::SoftmaxOracle(Matrix weights, Vector bias, std::optional<ImageShape> shape)
    : ClassifierOracle(shape), w_(std::move(weights)), b_(std::move(bias)) {
  if (w_.rows() < 2 || w_.cols() < 1) throw InvalidArgument("softmax oracle needs >= 2 classes");
  if (b_.size() != w_.rows()) throw DimensionMismatch("softmax bias length != number of classes");
  if (shape && shape->size() != dimension()) throw DimensionMismatch("softmax shape != dimension");
}

Vector SoftmaxOracle::logits(const Vector& x) const { return w_ * x + b_; }

Vector SoftmaxOracle::logits_vjp(const Vector&, const Vector& w) const {
  return w_.transpose() * w;
}

MlpOracle::MlpOracle(Matrix w1, Vector b1, Matrix w2, Vector b2, std::optional<ImageShape> shape)
    : ClassifierOracle(shape),
      w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(std::move(b2)) {
  if (b1_.size() != w1_.rows()) throw DimensionMismatch("mlp b1 length != hidden width");
  if (w2_.cols() != w1_.rows()) throw DimensionMismatch("mlp W2 columns != hidden width");
  if (b2_.size() != w2_.rows()) throw DimensionMismatch("mlp b2 length != number of classes");
  if (w2_.rows() < 2) throw InvalidArgument("mlp oracle needs >= 2 classes");
  if (shape && shape->size() != dimension()) throw DimensionMismatch("mlp shape != dimension");
}

Vector MlpOracle::logits(const Vector& x) const {
  const Vector h = (w1_ * x + b1_).array().tanh().matrix();
  return w2_ * h + b2_;
}

Vector MlpOracle::logits_vjp(const Vector& x, const Vector& w) const {
  const Vector h = (w1_ * x + b1_).array().tanh().matrix();
  const Vector back = ((w2_.transpose() * w).array() * (1.0 - h.array().square())).matrix();
  return w1_.transpose() * back;
}

// ---------------------------------------------------------------------------
// Construction and weights files

namespace {

Matrix gaussian_matrix(SplitMix64Stream& stream, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * stream.normal();
  }
  return m;
}

Vector gaussian_vector(SplitMix64Stream& stream, Eigen::Index n, double scale) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * stream.normal();
  return v;
}

void require_dims(const OracleDescriptor& d) {
  if (d.dimension == 0) throw InvalidArgument("oracle dimension must be positive");
  if (d.shape && d.shape->size() != d.dimension) {
    throw DimensionMismatch("oracle shape does not match its dimension");
  }
}

}  // namespace

OraclePtr make_oracle(const OracleDescriptor& d) {
  if (d.kind == OracleKind::Remote) return std::make_shared<RemoteOracle>(d.endpoint);
  require_dims(d);
  SplitMix64Stream stream(d.seed);
  const auto dim = static_cast<Eigen::Index>(d.dimension);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d.dimension));
  switch (d.kind) {
    case OracleKind::Linear:
      return std::make_shared<LinearOracle>(gaussian_vector(stream, dim, in_scale));
    case OracleKind::Quadratic:
      return std::make_shared<QuadraticOracle>(gaussian_vector(stream, dim, in_scale));
    case OracleKind::Softmax: {
      if (d.num_classes < 2) throw InvalidArgument("softmax oracle needs >= 2 classes");
      const auto k = static_cast<Eigen::Index>(d.num_classes);
      Matrix w = gaussian_matrix(stream, k, dim, in_scale);
      Vector b = gaussian_vector(stream, k, in_scale);
      return std::make_shared<SoftmaxOracle>(std::move(w), std::move(b), d.shape);
    }
    case OracleKind::Mlp: {
      if (d.num_classes < 2) throw InvalidArgument("mlp oracle needs >= 2 classes");
      if (d.hidden == 0) throw InvalidArgument("mlp hidden width must be positive");
      const auto k = static_cast<Eigen::Index>(d.num_classes);
      const auto hid = static_cast<Eigen::Index>(d.hidden);
      const double hid_scale = 1.0 / std::sqrt(static_cast<double>(d.hidden));
      Matrix w1 = gaussian_matrix(stream, hid, dim, in_scale);
      Vector b1 = gaussian_vector(stream, hid, in_scale);
      Matrix w2 = gaussian_matrix(stream, k, hid, hid_scale);
      Vector b2 = gaussian_vector(stream, k, hid_scale);
      if (d.shape && d.filter_smoothing > 0.0) {
        // Spatially correlated receptive fields, renormalized to unit row norm.
        for (Eigen::Index r = 0; r < hid; ++r) {
          Vector row = gaussian_blur(w1.row(r).transpose(), *d.shape, d.filter_smoothing);
          w1.row(r) = (row / row.norm()).transpose();
        }
      }
      return std::make_shared<MlpOracle>(std::move(w1), std::move(b1), std::move(w2), std::move(b2),
                                         d.shape);
    }
    case OracleKind::Remote: break;
  }
  throw InvalidArgument("unsupported oracle kind");
}

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Vector vector_from(const json& j, const char* name) {
  if (!j.is_array()) throw ConfigError(std::string("weights: '") + name + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix matrix_from(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string("weights: '") + name + "' must be a non-empty nested array");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(std::string("weights: ragged rows in '") + name + "'");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

std::optional<ImageShape> shape_from(const json& doc) {
  if (!doc.contains("shape") || doc["shape"].is_null()) return std::nullopt;
  const auto& s = doc["shape"];
  if (!s.is_array() || s.size() != 3) throw ConfigError("weights: 'shape' must be [height, width, channels]");
  return ImageShape{s[0].get<std::size_t>(), s[1].get<std::size_t>(), s[2].get<std::size_t>()};
}

}  // namespace

namespace {

OraclePtr build_from_weights(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind")) throw ConfigError("weights: missing 'kind'");
  const OracleKind kind = parse_oracle_kind(doc["kind"].get<std::string>());
  if (kind == OracleKind::Remote) throw ConfigError("weights: kind 'remote' has no weights");
  const auto shape = shape_from(doc);

  OraclePtr oracle;
  if (doc.contains("weights") && !doc["weights"].is_null()) {
    const auto& w = doc["weights"];
    switch (kind) {
      case OracleKind::Linear: oracle = std::make_shared<LinearOracle>(vector_from(w.at("c"), "c")); break;
      case OracleKind::Quadratic:
        oracle = std::make_shared<QuadraticOracle>(vector_from(w.at("center"), "center"));
        break;
      case OracleKind::Softmax:
        oracle = std::make_shared<SoftmaxOracle>(matrix_from(w.at("W"), "W"), vector_from(w.at("b"), "b"), shape);
        break;
      case OracleKind::Mlp:
        oracle = std::make_shared<MlpOracle>(matrix_from(w.at("W1"), "W1"), vector_from(w.at("b1"), "b1"),
                                             matrix_from(w.at("W2"), "W2"), vector_from(w.at("b2"), "b2"), shape);
        break;
      case OracleKind::Remote: break;
    }
  } else {
    OracleDescriptor d;
    d.kind = kind;
    d.dimension = doc.at("dimension").get<std::size_t>();
    d.num_classes = doc.value("num_classes", std::size_t{0});
    d.seed = doc.at("seed").get<std::uint64_t>();
    d.shape = shape;
    d.hidden = doc.value("hidden", std::size_t{64});
    d.filter_smoothing = doc.value("filter_smoothing", OracleDescriptor{}.filter_smoothing);
    oracle = make_oracle(d);
  }
  if (doc.contains("dimension") && doc["dimension"].get<std::size_t>() != oracle->dimension()) {
    throw DimensionMismatch("weights: declared dimension disagrees with weight arrays");
  }
  if (oracle->is_classifier() && doc.contains("num_classes") &&
      doc["num_classes"].get<std::size_t>() != oracle->num_classes()) {
    throw DimensionMismatch("weights: declared num_classes disagrees with weight arrays");
  }
  return oracle;
}

}  // namespace

OraclePtr oracle_from_weights(const json& doc) {
  try {
    return build_from_weights(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("weights: ") + e.what());
  }
}

OraclePtr load_weights_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weights file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("weights file " + path + ": " + e.what());
  }
  return oracle_from_weights(doc);
}

json weights_document(const Oracle& oracle) {
  json doc;
  doc["kind"] = to_string(oracle.kind());
  doc["dimension"] = oracle.dimension();
  doc["num_classes"] = oracle.num_classes();
  if (auto s = oracle.shape()) doc["shape"] = {s->height, s->width, s->channels};
  json w;
  if (auto* lin = dynamic_cast<const LinearOracle*>(&oracle)) {
    w["c"] = vector_json(lin->coefficients());
  } else if (auto* quad = dynamic_cast<const QuadraticOracle*>(&oracle)) {
    w["center"] = vector_json(quad->center());
  } else if (auto* soft = dynamic_cast<const SoftmaxOracle*>(&oracle)) {
    w["W"] = matrix_json(soft->weights());
    w["b"] = vector_json(soft->bias());
  } else if (auto* mlp = dynamic_cast<const MlpOracle*>(&oracle)) {
    doc["hidden"] = mlp->hidden();
    w["W1"] = matrix_json(mlp->w1());
    w["b1"] = vector_json(mlp->b1());
    w["W2"] = matrix_json(mlp->w2());
    w["b2"] = vector_json(mlp->b2());
  } else {
    throw Unsupported("only built-in oracles have a weights document");
  }
  doc["weights"] = std::move(w);
  return doc;
}

// ---------------------------------------------------------------------------
// Ledger and handle

std::uint64_t QueryLedger::remaining() const {
  if (!limit_) return std::numeric_limits<std::uint64_t>::max();
  return *limit_ > count_ ? *limit_ - count_ : 0;
}

void QueryLedger::require(std::uint64_t n) const {
  if (!can_afford(n)) {
    throw BudgetExhausted("query budget exhausted: need " + std::to_string(n) + ", " +
                          std::to_string(remaining()) + " remaining");
  }
}

void QueryLedger::charge(std::uint64_t n) {
  require(n);
  count_ += n;
}

OracleHandle::OracleHandle(OraclePtr oracle, std::optional<std::uint64_t> budget)
    : oracle_(std::move(oracle)), ledger_(budget) {
  if (!oracle_) throw InvalidArgument("null oracle");
}

double OracleHandle::loss(const LabeledInput& input) { return loss(input.point.data, input.label); }

double OracleHandle::loss(const Vector& x, int label) {
  return loss_batch(std::span<const Vector>(&x, 1), label).front();
}

std::vector<double> OracleHandle::loss_batch(std::span<const Vector> points, int label) {
  if (points.empty()) throw InvalidArgument("empty loss batch");
  ledger_.require(points.size());
  auto out = oracle_->losses(points, label);
  ledger_.charge(points.size());
  return out;
}

int OracleHandle::top_class(const Vector& x) const {
  return oracle_->top_classes(std::span<const Vector>(&x, 1)).front();
}

Vector OracleHandle::true_gradient(const Vector& x, int label) const { return oracle_->gradient(x, label); }

double OracleHandle::diagnostic_loss(const Vector& x, int label) const {
  return oracle_->losses(std::span<const Vector>(&x, 1), label).front();
}

}  // namespace bb
