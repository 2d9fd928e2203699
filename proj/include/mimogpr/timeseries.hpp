#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mimogpr {

/// Calendar month. Serialized as `YYYY-MM`.
struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  static YearMonth parse(std::string_view text);
  std::string to_string() const;

  // Months since year 0; consecutive months differ by one.
  int ordinal() const { return year * 12 + (month - 1); }
  static YearMonth from_ordinal(int ordinal);
  YearMonth plus(int months) const { return from_ordinal(ordinal() + months); }

  friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// Half-open row interval [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t row) const { return row >= begin && row < end; }

  friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// A date-indexed n x M matrix of monthly observations.
///
/// Rows are consecutive calendar months starting at `start()`, columns are the
/// named series. The constructor enforces the invariants (n >= 2, M >= 1,
/// unique nonempty names, finite cells), so every instance is valid.
class TimeSeriesPanel {
 public:
  TimeSeriesPanel(YearMonth start, std::vector<std::string> names, Eigen::MatrixXd values);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t series_count() const { return static_cast<std::size_t>(values_.cols()); }

  YearMonth start() const { return start_; }
  YearMonth month(std::size_t row) const { return start_.plus(static_cast<int>(row)); }
  // Row index of a calendar month; throws if outside the panel.
  std::size_t row_of(YearMonth month) const;

  const std::vector<std::string>& names() const { return names_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::span<const double> series(std::size_t column) const {
    return {values_.col(static_cast<Eigen::Index>(column)).data(), rows()};
  }

  // Sub-panel of consecutive rows.
  TimeSeriesPanel slice(RowRange rows) const;

 private:
  YearMonth start_;
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
};

TimeSeriesPanel read_panel(std::istream& in);
TimeSeriesPanel load_panel(const std::string& path);
void write_panel(std::ostream& out, const TimeSeriesPanel& panel);
void save_panel(const std::string& path, const TimeSeriesPanel& panel);

/// Shortest decimal text that round-trips a double (17 significant digits max).
std::string format_double(double value);

struct SeriesSummary {
  double minimum = 0.0;
  double maximum = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;   // n-1 divisor
  double skewness = 0.0;  // m3 / m2^(3/2), population moments
  double kurtosis = 0.0;  // excess: m4 / m2^2 - 3
};

SeriesSummary describe_series(std::span<const double> values);
// One summary per series over `window` (the whole panel when empty).
std::vector<SeriesSummary> describe_panel(const TimeSeriesPanel& panel, RowRange window = {});

/// Lag-embedded supervised pairs for one series.
///
/// Row i holds the window [y(t-1), ..., y(t-p)] (most recent lag first) for the
/// target y(t), t = origin_index + i.
struct SupervisedDataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
  int lags = 0;
  std::size_t origin_index = 0;

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
};

SupervisedDataset embed(std::span<const double> series, int lags);
// Rows of `embed(series, lags)` whose target index falls inside `targets`.
SupervisedDataset embed_range(std::span<const double> series, int lags, RowRange targets);
// Concatenation of two datasets with the same lag order (rows of `a` first).
SupervisedDataset concat(const SupervisedDataset& a, const SupervisedDataset& b);

struct SplitSpec {
  std::size_t train_len = 96;
  std::size_t valid_len = 60;
};

struct SplitRanges {
  RowRange train;
  RowRange valid;
  RowRange test;
};

SplitRanges split(std::size_t rows, const SplitSpec& spec, int lags);
SplitRanges split(const TimeSeriesPanel& panel, const SplitSpec& spec, int lags);

/// Per-column affine standardization fitted on a dataset.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Eigen::VectorXd means, Eigen::VectorXd scales, double target_mean, double target_scale);

  // Identity map for p inputs.
  static Standardizer identity(int lags);

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& scales() const { return scales_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }

  SupervisedDataset apply(const SupervisedDataset& data) const;
  SupervisedDataset invert(const SupervisedDataset& data) const;
  Eigen::MatrixXd apply_inputs(const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd apply_input(std::span<const double> window) const;
  double apply_target(double y) const { return (y - target_mean_) / target_scale_; }
  double invert_target(double z) const { return z * target_scale_ + target_mean_; }

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd scales_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
};

// Throws on a zero-variance input column or target.
Standardizer fit_standardizer(const SupervisedDataset& data);

}  // namespace mimogpr
