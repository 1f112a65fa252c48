#pragma once

#include "blackbandit/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bb {

enum class OracleKind { Linear, Quadratic, Softmax, Mlp, Remote };

std::string to_string(OracleKind kind);
OracleKind parse_oracle_kind(const std::string& text);

/// Everything needed to build (or reach) an oracle.
struct OracleDescriptor {
  OracleKind kind = OracleKind::Mlp;
  std::size_t dimension = 256;
  std::size_t num_classes = 10;
  std::uint64_t seed = 7;
  std::string endpoint;  // remote only, "host:port" or "http://host:port"
  std::optional<ImageShape> shape = ImageShape{16, 16, 1};
  std::size_t hidden = 64;
  /// Spatial Gaussian smoothing (pixels) applied to first-layer mlp filters
  /// of image-shaped models; 0 keeps i.i.d. weights.
  double filter_smoothing = 1.5;
};

/// Loss model L(x, y). Implementations are immutable and safe to share
/// between threads. Nothing here counts queries; see OracleHandle.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual OracleKind kind() const = 0;
  virtual std::size_t dimension() const = 0;
  /// Zero for non-classifiers (linear, quadratic).
  virtual std::size_t num_classes() const { return 0; }
  virtual std::optional<ImageShape> shape() const { return std::nullopt; }
  virtual bool has_gradient() const { return true; }
  bool is_classifier() const { return num_classes() > 0; }

  std::vector<double> losses(std::span<const Vector> points, int label) const;
  std::vector<int> top_classes(std::span<const Vector> points) const;
  /// Analytic gradient of the loss. Diagnostic only.
  Vector gradient(const Vector& x, int label) const;

  void check_point(const Vector& x) const;
  void check_label(int label) const;

 protected:
  virtual std::vector<double> compute_losses(std::span<const Vector> points, int label) const = 0;
  virtual std::vector<int> compute_top_classes(std::span<const Vector> points) const;
  virtual Vector compute_gradient(const Vector& x, int label) const;
};

using OraclePtr = std::shared_ptr<const Oracle>;

/// L(x) = <c, x>. The label is ignored.
class LinearOracle final : public Oracle {
 public:
  explicit LinearOracle(Vector coefficients);
  OracleKind kind() const override { return OracleKind::Linear; }
  std::size_t dimension() const override { return static_cast<std::size_t>(c_.size()); }
  const Vector& coefficients() const { return c_; }

 protected:
  std::vector<double> compute_losses(std::span<const Vector> points, int label) const override;
  Vector compute_gradient(const Vector& x, int label) const override;

 private:
  Vector c_;
};

/// L(x) = 0.5 * ||x - center||^2. The label is ignored.
class QuadraticOracle final : public Oracle {
 public:
  explicit QuadraticOracle(Vector center);
  OracleKind kind() const override { return OracleKind::Quadratic; }
  std::size_t dimension() const override { return static_cast<std::size_t>(center_.size()); }
  const Vector& center() const { return center_; }

 protected:
  std::vector<double> compute_losses(std::span<const Vector> points, int label) const override;
  Vector compute_gradient(const Vector& x, int label) const override;

 private:
  Vector center_;
};

/// Classifier whose loss is the softmax cross-entropy at the true label.
class ClassifierOracle : public Oracle {
 public:
  explicit ClassifierOracle(std::optional<ImageShape> shape) : shape_(shape) {}
  std::optional<ImageShape> shape() const override { return shape_; }

  virtual Vector logits(const Vector& x) const = 0;

 protected:
  /// Returns J^T w where J is the Jacobian of the logits at x.
  virtual Vector logits_vjp(const Vector& x, const Vector& w) const = 0;

  std::vector<double> compute_losses(std::span<const Vector> points, int label) const override;
  std::vector<int> compute_top_classes(std::span<const Vector> points) const override;
  Vector compute_gradient(const Vector& x, int label) const override;

 private:
  std::optional<ImageShape> shape_;
};

/// Affine logits W x + b.
class SoftmaxOracle final : public ClassifierOracle {
 public:
  SoftmaxOracle(Matrix weights, Vector bias, std::optional<ImageShape> shape = std::nullopt);
  OracleKind kind() const override { return OracleKind::Softmax; }
  std::size_t dimension() const override { return static_cast<std::size_t>(w_.cols()); }
  std::size_t num_classes() const override { return static_cast<std::size_t>(w_.rows()); }
  Vector logits(const Vector& x) const override;
  const Matrix& weights() const { return w_; }
  const Vector& bias() const { return b_; }

 protected:
  Vector logits_vjp(const Vector& x, const Vector& w) const override;

 private:
  Matrix w_;
  Vector b_;
};

/// One tanh hidden layer: logits = W2 tanh(W1 x + b1) + b2.
class MlpOracle final : public ClassifierOracle {
 public:
  MlpOracle(Matrix w1, Vector b1, Matrix w2, Vector b2, std::optional<ImageShape> shape = std::nullopt);
  OracleKind kind() const override { return OracleKind::Mlp; }
  std::size_t dimension() const override { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t num_classes() const override { return static_cast<std::size_t>(w2_.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1_.rows()); }
  Vector logits(const Vector& x) const override;
  const Matrix& w1() const { return w1_; }
  const Vector& b1() const { return b1_; }
  const Matrix& w2() const { return w2_; }
  const Vector& b2() const { return b2_; }

 protected:
  Vector logits_vjp(const Vector& x, const Vector& w) const override;

 private:
  Matrix w1_;
  Vector b1_;
  Matrix w2_;
  Vector b2_;
};

/// Builds a built-in oracle from its seed, or connects to a remote one.
OraclePtr make_oracle(const OracleDescriptor& descriptor);

/// Weights-file document shared with the reference oracle service:
/// {kind, dimension, num_classes, seed | weights{...}, shape?, hidden?}.
/// Explicit weight arrays win over the seed.
OraclePtr oracle_from_weights(const nlohmann::json& document);
OraclePtr load_weights_file(const std::string& path);
/// Serializes a built-in oracle with explicit row-major weight arrays.
nlohmann::json weights_document(const Oracle& oracle);

/// Loss-query counter for one run. An optional limit turns it into a budget.
class QueryLedger {
 public:
  explicit QueryLedger(std::optional<std::uint64_t> limit = std::nullopt) : limit_(limit) {}

  std::uint64_t loss_queries() const { return count_; }
  std::optional<std::uint64_t> limit() const { return limit_; }
  std::uint64_t remaining() const;
  bool can_afford(std::uint64_t n) const { return remaining() >= n; }
  /// Throws BudgetExhausted (without charging) when n exceeds the remaining budget.
  void require(std::uint64_t n) const;
  void charge(std::uint64_t n);

 private:
  std::uint64_t count_ = 0;
  std::optional<std::uint64_t> limit_;
};

/// Black-box access to an oracle for a single run: every loss evaluation
/// goes through the ledger. Top-class checks are free. Gradients and
/// uncounted losses are diagnostics and must not drive black-box methods.
class OracleHandle {
 public:
  explicit OracleHandle(OraclePtr oracle, std::optional<std::uint64_t> budget = std::nullopt);

  double loss(const LabeledInput& input);
  double loss(const Vector& x, int label);
  std::vector<double> loss_batch(std::span<const Vector> points, int label);

  int top_class(const Vector& x) const;

  Vector true_gradient(const Vector& x, int label) const;
  double diagnostic_loss(const Vector& x, int label) const;
  bool diagnostics_available() const { return oracle_->has_gradient(); }

  const Oracle& oracle() const { return *oracle_; }
  const OraclePtr& shared_oracle() const { return oracle_; }
  const QueryLedger& ledger() const { return ledger_; }
  std::uint64_t queries() const { return ledger_.loss_queries(); }
  std::uint64_t remaining() const { return ledger_.remaining(); }

 private:
  OraclePtr oracle_;
  QueryLedger ledger_;
};

}  // namespace bb
