#include "mimogpr/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mimogpr/error.hpp"

namespace mimogpr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(value);
}

}  // namespace

YearMonth YearMonth::parse(std::string_view text) {
  text = trim(text);
  int year = 0;
  int month = 0;
  const bool shape_ok = text.size() == 7 && text[4] == '-';
  if (shape_ok) {
    const auto y = std::from_chars(text.data(), text.data() + 4, year);
    const auto m = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (y.ec == std::errc() && y.ptr == text.data() + 4 && m.ec == std::errc() && m.ptr == text.data() + 7 &&
        month >= 1 && month <= 12) {
      return YearMonth{year, month};
    }
  }
  throw Error("invalid month '" + std::string(text) + "' (expected YYYY-MM)");
}

std::string YearMonth::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

YearMonth YearMonth::from_ordinal(int ordinal) {
  const int year = ordinal >= 0 ? ordinal / 12 : (ordinal - 11) / 12;
  return YearMonth{year, ordinal - year * 12 + 1};
}

TimeSeriesPanel::TimeSeriesPanel(YearMonth start, std::vector<std::string> names, Eigen::MatrixXd values)
    : start_(start), names_(std::move(names)), values_(std::move(values)) {
  if (start_.month < 1 || start_.month > 12) throw Error("panel start month out of range");
  if (values_.rows() < 2) throw Error("panel needs at least 2 months");
  if (values_.cols() < 1) throw Error("panel needs at least 1 series");
  if (names_.size() != static_cast<std::size_t>(values_.cols())) {
    throw Error("panel has " + std::to_string(values_.cols()) + " columns but " + std::to_string(names_.size()) +
                " names");
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw Error("empty series name");
    if (!seen.insert(name).second) throw Error("duplicate series name '" + name + "'");
  }
  if (!values_.allFinite()) throw Error("panel contains non-finite values");
}

std::size_t TimeSeriesPanel::row_of(YearMonth month) const {
  const int offset = month.ordinal() - start_.ordinal();
  if (offset < 0 || offset >= static_cast<int>(rows())) {
    throw Error("month " + month.to_string() + " outside panel " + start_.to_string() + ".." +
                this->month(rows() - 1).to_string());
  }
  return static_cast<std::size_t>(offset);
}

TimeSeriesPanel TimeSeriesPanel::slice(RowRange range) const {
  if (range.end > rows() || range.size() < 2) throw Error("invalid panel slice");
  return TimeSeriesPanel(month(range.begin), names_,
                         values_.middleRows(static_cast<Eigen::Index>(range.begin),
                                            static_cast<Eigen::Index>(range.size())));
}

TimeSeriesPanel read_panel(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) throw ParseError(line_no, 1, "header needs a date column and at least one series");
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c].empty()) throw ParseError(line_no, c + 1, "empty series name");
      names.emplace_back(fields[c]);
    }
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError(line_no, 1, "empty file");

  std::vector<YearMonth> dates;
  std::vector<double> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != names.size() + 1) {
      throw ParseError(line_no, std::min(fields.size(), names.size() + 1),
                       "expected " + std::to_string(names.size() + 1) + " fields, found " +
                           std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(line_no, 1, "missing date");
    YearMonth date;
    try {
      date = YearMonth::parse(fields[0]);
    } catch (const Error& e) {
      throw ParseError(line_no, 1, e.what());
    }
    if (!dates.empty()) {
      const int step = date.ordinal() - dates.back().ordinal();
      if (step <= 0) {
        const bool duplicate = std::any_of(dates.begin(), dates.end(), [&](const YearMonth& d) { return d == date; });
        throw ParseError(line_no, 1, duplicate ? "duplicate date " + date.to_string()
                                               : "dates out of order at " + date.to_string());
      }
      if (step > 1) throw ParseError(line_no, 1, "gap in monthly sequence before " + date.to_string());
    }
    dates.push_back(date);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v)) {
        throw ParseError(line_no, c + 1, "non-numeric cell '" + std::string(fields[c]) + "'");
      }
      cells.push_back(v);
    }
  }
  if (dates.empty()) throw ParseError(line_no, 1, "no data rows");
  if (dates.size() < 2) throw ParseError(line_no, 1, "panel needs at least 2 months");

  const auto n = static_cast<Eigen::Index>(dates.size());
  const auto m = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd values(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) values(i, j) = cells[static_cast<std::size_t>(i * m + j)];
  }
  return TimeSeriesPanel(dates.front(), std::move(names), std::move(values));
}

TimeSeriesPanel load_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open panel file '" + path + "'");
  try {
    return read_panel(in);
  } catch (const ParseError& e) {
    throw ParseError(e.row(), e.column(), e.detail() + " in '" + path + "'");
  }
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("cannot format value");
  return std::string(buf, ptr);
}

void write_panel(std::ostream& out, const TimeSeriesPanel& panel) {
  out << "date";
  for (const auto& name : panel.names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < panel.rows(); ++i) {
    out << panel.month(i).to_string();
    for (std::size_t j = 0; j < panel.series_count(); ++j) {
      out << ',' << format_double(panel.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

void save_panel(const std::string& path, const TimeSeriesPanel& panel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write panel file '" + path + "'");
  write_panel(out, panel);
  if (!out) throw Error("write failed for '" + path + "'");
}

SeriesSummary describe_series(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) throw Error("descriptive statistics need at least 4 observations, got " + std::to_string(n));
  SeriesSummary s;
  s.minimum = *std::min_element(values.begin(), values.end());
  s.maximum = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  if (m2 == 0.0) throw Error("zero variance: skewness and kurtosis undefined");
  const double nn = static_cast<double>(n);
  s.std_dev = std::sqrt(m2 / (nn - 1.0));
  m2 /= nn;
  m3 /= nn;
  m4 /= nn;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.kurtosis = m4 / (m2 * m2) - 3.0;
  return s;
}

std::vector<SeriesSummary> describe_panel(const TimeSeriesPanel& panel, RowRange window) {
  if (window.begin == 0 && window.end == 0) window = {0, panel.rows()};
  if (window.end > panel.rows() || window.empty()) throw Error("describe window outside panel");
  std::vector<SeriesSummary> out;
  out.reserve(panel.series_count());
  for (std::size_t j = 0; j < panel.series_count(); ++j) {
    try {
      out.push_back(describe_series(panel.series(j).subspan(window.begin, window.size())));
    } catch (const Error& e) {
      throw Error("series '" + panel.names()[j] + "': " + e.what());
    }
  }
  return out;
}

SupervisedDataset embed(std::span<const double> series, int lags) {
  if (lags < 1) throw Error("lag order must be >= 1");
  if (series.size() <= static_cast<std::size_t>(lags)) {
    throw Error("series of length " + std::to_string(series.size()) + " too short for " + std::to_string(lags) +
                " lags");
  }
  return embed_range(series, lags, {static_cast<std::size_t>(lags), series.size()});
}

SupervisedDataset embed_range(std::span<const double> series, int lags, RowRange targets) {
  if (lags < 1) throw Error("lag order must be >= 1");
  const auto p = static_cast<std::size_t>(lags);
  if (targets.begin < p || targets.end > series.size() || targets.empty()) {
    throw Error("target range [" + std::to_string(targets.begin) + ", " + std::to_string(targets.end) +
                ") invalid for series of length " + std::to_string(series.size()) + " with " +
                std::to_string(lags) + " lags");
  }
  SupervisedDataset d;
  d.lags = lags;
  d.origin_index = targets.begin;
  const auto rows = static_cast<Eigen::Index>(targets.size());
  d.inputs.resize(rows, lags);
  d.targets.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = targets.begin + static_cast<std::size_t>(r);
    d.targets(r) = series[t];
    for (int i = 0; i < lags; ++i) d.inputs(r, i) = series[t - 1 - static_cast<std::size_t>(i)];
  }
  return d;
}

SupervisedDataset concat(const SupervisedDataset& a, const SupervisedDataset& b) {
  if (a.lags != b.lags) throw Error("cannot concatenate datasets with different lag orders");
  SupervisedDataset d;
  d.lags = a.lags;
  d.origin_index = a.origin_index;
  d.inputs.resize(a.inputs.rows() + b.inputs.rows(), a.lags);
  d.inputs << a.inputs, b.inputs;
  d.targets.resize(a.targets.size() + b.targets.size());
  d.targets << a.targets, b.targets;
  return d;
}

SplitRanges split(std::size_t rows, const SplitSpec& spec, int lags) {
  if (lags < 1) throw Error("lag order must be >= 1");
  if (spec.train_len < static_cast<std::size_t>(lags) + 1) {
    throw Error("train length " + std::to_string(spec.train_len) + " must exceed the lag order " +
                std::to_string(lags));
  }
  if (spec.valid_len < 1) throw Error("validation length must be >= 1");
  if (spec.train_len + spec.valid_len >= rows) {
    throw Error("split " + std::to_string(spec.train_len) + "+" + std::to_string(spec.valid_len) +
                " leaves no test months in a panel of " + std::to_string(rows));
  }
  SplitRanges s;
  s.train = {0, spec.train_len};
  s.valid = {spec.train_len, spec.train_len + spec.valid_len};
  s.test = {spec.train_len + spec.valid_len, rows};
  return s;
}

SplitRanges split(const TimeSeriesPanel& panel, const SplitSpec& spec, int lags) {
  return split(panel.rows(), spec, lags);
}

Standardizer::Standardizer(Eigen::VectorXd means, Eigen::VectorXd scales, double target_mean, double target_scale)
    : means_(std::move(means)), scales_(std::move(scales)), target_mean_(target_mean), target_scale_(target_scale) {
  if (means_.size() != scales_.size()) throw Error("standardizer means/scales size mismatch");
  if ((scales_.array() <= 0.0).any() || !(target_scale_ > 0.0)) throw Error("standardizer scales must be positive");
}

Standardizer Standardizer::identity(int lags) {
  return Standardizer(Eigen::VectorXd::Zero(lags), Eigen::VectorXd::Ones(lags), 0.0, 1.0);
}

Eigen::MatrixXd Standardizer::apply_inputs(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != means_.size()) throw Error("standardizer dimension mismatch");
  return ((inputs.rowwise() - means_.transpose()).array().rowwise() / scales_.transpose().array()).matrix();
}

Eigen::VectorXd Standardizer::apply_input(std::span<const double> window) const {
  if (static_cast<Eigen::Index>(window.size()) != means_.size()) throw Error("standardizer dimension mismatch");
  Eigen::VectorXd z(means_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = (window[static_cast<std::size_t>(i)] - means_(i)) / scales_(i);
  return z;
}

SupervisedDataset Standardizer::apply(const SupervisedDataset& data) const {
  SupervisedDataset out = data;
  out.inputs = apply_inputs(data.inputs);
  out.targets = (data.targets.array() - target_mean_) / target_scale_;
  return out;
}

SupervisedDataset Standardizer::invert(const SupervisedDataset& data) const {
  if (data.inputs.cols() != means_.size()) throw Error("standardizer dimension mismatch");
  SupervisedDataset out = data;
  out.inputs = ((data.inputs.array().rowwise() * scales_.transpose().array()).rowwise() + means_.transpose().array())
                   .matrix();
  out.targets = data.targets.array() * target_scale_ + target_mean_;
  return out;
}

namespace {

void column_moments(const Eigen::Ref<const Eigen::VectorXd>& v, double& mean, double& scale) {
  const double n = static_cast<double>(v.size());
  mean = v.mean();
  scale = std::sqrt((v.array() - mean).square().sum() / (n - 1.0));
}

}  // namespace

Standardizer fit_standardizer(const SupervisedDataset& data) {
  if (data.size() < 2) throw Error("standardizer needs at least 2 rows");
  const Eigen::Index p = data.inputs.cols();
  Eigen::VectorXd means(p);
  Eigen::VectorXd scales(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    column_moments(data.inputs.col(j), means(j), scales(j));
    if (!(scales(j) > 0.0)) throw Error("zero-variance input column " + std::to_string(j + 1));
  }
  double target_mean = 0.0;
  double target_scale = 0.0;
  column_moments(data.targets, target_mean, target_scale);
  if (!(target_scale > 0.0)) throw Error("zero-variance target");
  return Standardizer(std::move(means), std::move(scales), target_mean, target_scale);
}

}  // namespace mimogpr
