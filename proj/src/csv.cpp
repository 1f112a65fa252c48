#include "blackbandit/csv.hpp"

#include <charconv>
#include <cmath>

namespace bb::csv {

std::string format_double(double value) {
  if (std::isnan(value)) return {};
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Writer::Writer(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out), columns_(header.size()) {
  for (auto h : header) field(h);
  end_row();
}

Writer& Writer::field(std::string_view text) {
  if (pending_ > 0) out_ << ',';
  if (text.find_first_of(",\"\n") != std::string_view::npos) {
    out_ << '"';
    for (char c : text) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  } else {
    out_ << text;
  }
  ++pending_;
  return *this;
}

Writer& Writer::field(double value) { return field(std::string_view(format_double(value))); }
Writer& Writer::field(std::uint64_t value) { return field(std::string_view(std::to_string(value))); }
Writer& Writer::field(int value) { return field(std::string_view(std::to_string(value))); }
Writer& Writer::field(bool value) { return field(std::string_view(value ? "1" : "0")); }

void Writer::end_row() {
  if (pending_ != columns_) throw Error("csv row has " + std::to_string(pending_) + " fields, expected " +
                                        std::to_string(columns_));
  out_ << '\n';
  pending_ = 0;
}

void write_attacks(std::ostream& out, std::span<const RunRecord> runs) {
  Writer w(out, {"method", "input_id", "seed", "success", "queries", "iterations"});
  for (const auto& r : runs) {
    w.field(r.method).field(std::uint64_t{r.input_id}).field(r.seed).field(r.success).field(r.queries);
    w.field(std::uint64_t{r.iterations}).end_row();
  }
}

void write_trace(std::ostream& out, std::span<const RunRecord> runs) {
  Writer w(out, {"method", "input_id", "iteration", "queries", "loss", "cosine_latent_vs_true"});
  for (const auto& r : runs) {
    for (const auto& rec : r.trace.records) {
      w.field(r.method).field(std::uint64_t{r.input_id}).field(std::uint64_t{rec.iteration}).field(rec.queries);
      w.field(rec.loss).field(rec.cosine).end_row();
    }
  }
}

void write_sign_fraction(std::ostream& out, std::span<const SignFractionRow> rows) {
  Writer w(out, {"selection", "fraction", "adversarial_rate", "stderr"});
  for (const auto& r : rows) {
    w.field(to_string(r.selection)).field(r.fraction).field(r.adversarial_rate).field(r.stderr_).end_row();
  }
}

void write_cosine(std::ostream& out, std::span<const CosineRow> rows) {
  Writer w(out, {"step_size", "step_index", "mean_cosine", "stderr"});
  for (const auto& r : rows) {
    w.field(r.step_size).field(std::uint64_t{r.step_index}).field(r.mean_cosine).field(r.stderr_).end_row();
  }
}

void write_cosine_baseline(std::ostream& out, const MeanStderr& baseline) {
  Writer w(out, {"pairs", "mean_cosine", "stderr"});
  w.field(std::uint64_t{baseline.count}).field(baseline.mean).field(baseline.stderr_).end_row();
}

void write_tiling(std::ostream& out, std::span<const TilingRow> rows) {
  Writer w(out, {"tile", "mean_cosine", "stderr"});
  for (const auto& r : rows) w.field(std::uint64_t{r.tile}).field(r.mean_cosine).field(r.stderr_).end_row();
}

void write_sparsity(std::ostream& out, std::span<const SparsityRow> rows) {
  Writer w(out, {"k", "mean_mass_fraction", "stderr"});
  for (const auto& r : rows) w.field(std::uint64_t{r.k}).field(r.mean_mass_fraction).field(r.stderr_).end_row();
}

void write_equivalence(std::ostream& out, std::span<const EquivalenceRow> rows) {
  Writer w(out, {"k", "d", "p", "trials", "gap_q99", "bound"});
  for (const auto& r : rows) {
    w.field(std::uint64_t{r.k}).field(std::uint64_t{r.d}).field(r.p).field(std::uint64_t{r.trials});
    w.field(r.gap_q99).field(r.bound).end_row();
  }
}

void write_summary(std::ostream& out, std::span<const MethodReport> methods) {
  Writer w(out, {"method", "runs", "successes", "success_rate", "failure_rate", "avg_queries_success",
                 "baseline_intersection", "avg_queries_on_baseline_success", "median_queries"});
  for (const auto& m : methods) {
    w.field(m.name).field(std::uint64_t{m.runs}).field(std::uint64_t{m.successes}).field(m.success_rate);
    w.field(m.failure_rate).field(m.avg_queries_success).field(std::uint64_t{m.baseline_intersection});
    w.field(m.avg_queries_on_baseline_success).field(m.median_queries).end_row();
  }
}

void write_query_cdf(std::ostream& out, std::span<const MethodReport> methods) {
  Writer w(out, {"method", "queries", "success_fraction"});
  for (const auto& m : methods) {
    for (const auto& [q, f] : m.query_cdf) w.field(m.name).field(q).field(f).end_row();
  }
}

void write_avg_queries_by_success(std::ostream& out, std::span<const MethodReport> methods) {
  Writer w(out, {"method", "success_rate", "avg_queries"});
  for (const auto& m : methods) {
    for (const auto& [rate, q] : m.avg_queries_by_success) w.field(m.name).field(rate).field(q).end_row();
  }
}

void write_curves(std::ostream& out, std::span<const MethodReport> methods) {
  Writer w(out, {"method", "iteration", "mean_loss_carried", "mean_cosine"});
  for (const auto& m : methods) {
    for (std::size_t t = 0; t < m.mean_loss_by_iteration.size(); ++t) {
      w.field(m.name).field(std::uint64_t{t + 1}).field(m.mean_loss_by_iteration[t]);
      w.field(m.mean_cosine_by_iteration[t]).end_row();
    }
  }
}

void ensure_parent(const std::filesystem::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace bb::csv
