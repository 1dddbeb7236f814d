#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtl/evidence.hpp"
#include "dtl/transfer.hpp"

namespace dtl {

enum class ReportFormat { text, csv };

ReportFormat parse_report_format(const std::string& name);

/// Primary-network baseline: errors in percent.
struct BaselineRow {
  std::string dataset;
  double train_err_pct = 0.0;
  double test_err_pct = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
};

/// One strategy on one primary -> target pair.
struct ComparisonRow {
  std::string primary;
  std::string target;
  Strategy strategy = Strategy::standard;
  double train_err_pct = 0.0;
  double test_err_pct = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
};

/// Two decimals, as in the result tables.
std::string format_percent(double pct);

std::string format_baseline(std::span<const BaselineRow> rows, ReportFormat format);
std::string format_comparison(std::span<const ComparisonRow> rows, ReportFormat format);

/// Inverse of format_comparison(rows, csv). Percentages come back at the
/// printed precision.
std::vector<ComparisonRow> parse_comparison_csv(const std::string& csv);

std::vector<BaselineRow> parse_baseline_csv(const std::string& csv);

/// Confusion matrix, R, S, theta and gamma per single-filter net. CSV mode
/// emits one row per (filter, class).
std::string format_bpa_inspect(std::span<const BpaResult> results, std::span<const double> gammas, ReportFormat format);

}  // namespace dtl
