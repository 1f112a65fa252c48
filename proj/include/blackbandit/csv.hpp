#pragma once

#include "blackbandit/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bb::csv {

/// Shortest decimal that round-trips; NaN becomes an empty field.
std::string format_double(double value);

class Writer {
 public:
  Writer(std::ostream& out, std::initializer_list<std::string_view> header);

  Writer& field(std::string_view text);
  Writer& field(double value);
  Writer& field(std::uint64_t value);
  Writer& field(int value);
  Writer& field(bool value);
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t pending_ = 0;
};

// attacks.csv / trace.csv
void write_attacks(std::ostream& out, std::span<const RunRecord> runs);
void write_trace(std::ostream& out, std::span<const RunRecord> runs);

void write_sign_fraction(std::ostream& out, std::span<const SignFractionRow> rows);
void write_cosine(std::ostream& out, std::span<const CosineRow> rows);
void write_cosine_baseline(std::ostream& out, const MeanStderr& baseline);
void write_tiling(std::ostream& out, std::span<const TilingRow> rows);
void write_sparsity(std::ostream& out, std::span<const SparsityRow> rows);
void write_equivalence(std::ostream& out, std::span<const EquivalenceRow> rows);

// Benchmark aggregates.
void write_summary(std::ostream& out, std::span<const MethodReport> methods);
void write_query_cdf(std::ostream& out, std::span<const MethodReport> methods);
void write_avg_queries_by_success(std::ostream& out, std::span<const MethodReport> methods);
void write_curves(std::ostream& out, std::span<const MethodReport> methods);

/// Opens `path` for writing (creating parent directories) and hands the stream to `fill`.
template <typename Fill>
void write_file(const std::filesystem::path& path, Fill&& fill);

void ensure_parent(const std::filesystem::path& path);

}  // namespace bb::csv

#include <fstream>

#include "blackbandit/errors.hpp"

template <typename Fill>
void bb::csv::write_file(const std::filesystem::path& path, Fill&& fill) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  fill(out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}
