#pragma once

#include "blackbandit/oracle.hpp"

#include <string>

namespace bb {

/// Client for a loss oracle served over HTTP/JSON:
///   POST /v1/loss       {"points": [[...], ...], "label": int} -> {"losses": [...]}
///   POST /v1/top_class  {"points": [[...], ...]}               -> {"classes": [...]}
///   GET  /v1/meta                                               -> {"dimension": int, "num_classes": int}
/// Gradients are never requested over the wire.
class RemoteOracle final : public Oracle {
 public:
  /// Fetches /v1/meta; throws TransportError when the service is unreachable.
  explicit RemoteOracle(std::string endpoint, double timeout_seconds = 30.0);

  OracleKind kind() const override { return OracleKind::Remote; }
  std::size_t dimension() const override { return dimension_; }
  std::size_t num_classes() const override { return num_classes_; }
  bool has_gradient() const override { return false; }
  const std::string& endpoint() const { return base_url_; }

 protected:
  std::vector<double> compute_losses(std::span<const Vector> points, int label) const override;
  std::vector<int> compute_top_classes(std::span<const Vector> points) const override;

 private:
  std::string base_url_;
  double timeout_;
  std::size_t dimension_ = 0;
  std::size_t num_classes_ = 0;
};

}  // namespace bb
