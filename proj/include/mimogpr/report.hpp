#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mimogpr/harness.hpp"
#include "mimogpr/metrics.hpp"
#include "mimogpr/timeseries.hpp"

namespace mimogpr {

// `model,series,origin,h,forecast,actual`; origin as YYYY-MM, empty actual
// when the target lies beyond the panel.
void write_records_csv(std::ostream& out, const std::vector<ForecastRecord>& records, const TimeSeriesPanel& panel);

/// Candidate-versus-benchmark statistics per series and horizon.
struct ComparisonTable {
  std::string candidate;
  std::string benchmark;
  std::vector<std::string> series;
  std::vector<int> horizons;
  std::vector<std::vector<ComparisonResult>> cells;  // [series][horizon]
  std::string window_label;
};

// Scores the records of two models. Only records with actuals are used.
ComparisonTable build_comparison(const std::vector<ForecastRecord>& records, ModelKind candidate,
                                 ModelKind benchmark, const TimeSeriesPanel& panel, const std::vector<int>& horizons,
                                 DmLoss loss = DmLoss::Absolute);

// rMAPE / DM / M-DM blocks per series, one column per horizon.
void write_accuracy_csv(std::ostream& out, const ComparisonTable& table);
void write_accuracy_markdown(std::ostream& out, const ComparisonTable& table);
// PLAE grid.
void write_plae_csv(std::ostream& out, const ComparisonTable& table);
void write_plae_markdown(std::ostream& out, const ComparisonTable& table);

struct DescribeTable {
  std::vector<std::string> rows;
  std::vector<SeriesSummary> summaries;
  std::string window_label;
};

// Per-series summaries over `window` plus a "Total" row for the row sums.
DescribeTable describe_with_total(const TimeSeriesPanel& panel, RowRange window);
void write_describe_csv(std::ostream& out, const DescribeTable& table);
void write_describe_markdown(std::ostream& out, const DescribeTable& table);

// Fixed-point text with `decimals` digits ("nan" for NaN).
std::string fixed(double value, int decimals);

}  // namespace mimogpr
