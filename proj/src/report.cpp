#include "mimogpr/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

#include "mimogpr/error.hpp"

namespace mimogpr {

std::string fixed(double value, int decimals) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  // Avoid "-0.0" style output.
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

void write_records_csv(std::ostream& out, const std::vector<ForecastRecord>& records, const TimeSeriesPanel& panel) {
  out << "model,series,origin,h,forecast,actual\n";
  for (const auto& r : records) {
    out << to_string(r.model) << ',' << panel.names().at(r.series) << ',' << panel.month(r.origin).to_string() << ','
        << r.horizon << ',' << format_double(r.forecast) << ',';
    if (r.actual) out << format_double(*r.actual);
    out << '\n';
  }
}

ComparisonTable build_comparison(const std::vector<ForecastRecord>& records, ModelKind candidate,
                                 ModelKind benchmark, const TimeSeriesPanel& panel, const std::vector<int>& horizons,
                                 DmLoss loss) {
  // (model, series, horizon) -> origin -> (forecast, actual)
  std::map<std::tuple<ModelKind, std::size_t, int>, std::map<std::size_t, std::pair<double, double>>> index;
  std::size_t first_target = panel.rows();
  std::size_t last_target = 0;
  for (const auto& r : records) {
    if (!r.actual) continue;
    index[{r.model, r.series, r.horizon}][r.origin] = {r.forecast, *r.actual};
    first_target = std::min(first_target, r.target());
    last_target = std::max(last_target, r.target());
  }

  ComparisonTable table;
  table.candidate = std::string(to_string(candidate));
  table.benchmark = std::string(to_string(benchmark));
  table.series = panel.names();
  table.horizons = horizons;
  if (first_target <= last_target) {
    table.window_label = panel.month(first_target).to_string() + ".." + panel.month(last_target).to_string();
  }
  for (std::size_t s = 0; s < panel.series_count(); ++s) {
    std::vector<ComparisonResult> row;
    for (int h : horizons) {
      const auto a = index.find({candidate, s, h});
      const auto b = index.find({benchmark, s, h});
      if (a == index.end() || b == index.end()) {
        throw Error("no scored records for series '" + panel.names()[s] + "' at h=" + std::to_string(h));
      }
      if (a->second.size() != b->second.size()) throw Error("candidate and benchmark cover different origins");
      const auto n = static_cast<Eigen::Index>(a->second.size());
      Eigen::VectorXd actual(n), fa(n), fb(n);
      Eigen::Index t = 0;
      for (const auto& [origin, pair] : a->second) {
        const auto other = b->second.find(origin);
        if (other == b->second.end()) throw Error("candidate and benchmark cover different origins");
        actual(t) = pair.second;
        fa(t) = pair.first;
        fb(t) = other->second.first;
        ++t;
      }
      row.push_back(compare(ErrorSeries::from_forecasts(actual, fa, h), ErrorSeries::from_forecasts(actual, fb, h),
                            loss));
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

namespace {

void horizon_header(std::ostream& out, const ComparisonTable& t, const char* sep) {
  for (int h : t.horizons) out << sep << "h=" << h;
}

std::size_t periods(const ComparisonTable& t) {
  return t.cells.empty() || t.cells.front().empty() ? 0 : t.cells.front().front().n;
}

}  // namespace

void write_accuracy_csv(std::ostream& out, const ComparisonTable& t) {
  out << "series,statistic";
  horizon_header(out, t, ",");
  out << '\n';
  const char* names[] = {"rMAPE", "DM", "M-DM"};
  for (std::size_t s = 0; s < t.series.size(); ++s) {
    for (int k = 0; k < 3; ++k) {
      out << t.series[s] << ',' << names[k];
      for (const auto& c : t.cells[s]) {
        const double v = k == 0 ? c.rmape : (k == 1 ? c.dm_stat : c.mdm_stat);
        out << ',' << fixed(v, 3);
      }
      out << '\n';
    }
  }
}

void write_accuracy_markdown(std::ostream& out, const ComparisonTable& t) {
  out << "Forecast accuracy: " << t.candidate << " vs. " << t.benchmark;
  if (!t.window_label.empty()) out << " (" << t.window_label << ")";
  out << "\n\n| Series | Statistic |";
  for (int h : t.horizons) out << " h = " << h << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < t.horizons.size(); ++i) out << "---:|";
  out << '\n';
  const char* names[] = {"rMAPE", "DM", "M-DM"};
  for (std::size_t s = 0; s < t.series.size(); ++s) {
    for (int k = 0; k < 3; ++k) {
      out << "| " << (k == 0 ? t.series[s] : "") << " | " << names[k] << " |";
      for (const auto& c : t.cells[s]) {
        const double v = k == 0 ? c.rmape : (k == 1 ? c.dm_stat : c.mdm_stat);
        out << ' ' << fixed(v, 3) << " |";
      }
      out << '\n';
    }
  }
  const std::size_t n = periods(t);
  out << "\nrMAPE = MAPE(" << t.candidate << ") / MAPE(" << t.benchmark << "); values below 1 favour "
      << t.candidate << ". Negative DM: " << t.benchmark << " has the larger errors. n = " << n
      << " periods. 5% critical value " << fixed(kReportedCriticalValue, 3);
  if (n >= 2) out << " (Student-t with " << n - 1 << " df: " << fixed(student_t_critical(n), 3) << ")";
  out << ".\n";
}

void write_plae_csv(std::ostream& out, const ComparisonTable& t) {
  out << "series";
  horizon_header(out, t, ",");
  out << '\n';
  for (std::size_t s = 0; s < t.series.size(); ++s) {
    out << t.series[s];
    for (const auto& c : t.cells[s]) out << ',' << fixed(c.plae_pct, 1);
    out << '\n';
  }
}

void write_plae_markdown(std::ostream& out, const ComparisonTable& t) {
  out << "PLAE: " << t.candidate << " with respect to " << t.benchmark;
  if (!t.window_label.empty()) out << " (" << t.window_label << ")";
  out << "\n\n| Series |";
  for (int h : t.horizons) out << " h = " << h << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < t.horizons.size(); ++i) out << "---:|";
  out << '\n';
  for (std::size_t s = 0; s < t.series.size(); ++s) {
    out << "| " << t.series[s] << " |";
    for (const auto& c : t.cells[s]) out << ' ' << fixed(c.plae_pct, 1) << " |";
    out << '\n';
  }
  out << "\nPercentage of the " << periods(t) << " out-of-sample periods in which " << t.candidate
      << " has a strictly lower absolute error than " << t.benchmark << ".\n";
}

DescribeTable describe_with_total(const TimeSeriesPanel& panel, RowRange window) {
  if (window.begin == 0 && window.end == 0) window = {0, panel.rows()};
  if (window.empty() || window.end > panel.rows()) throw Error("describe window outside panel");
  DescribeTable t;
  t.rows = panel.names();
  t.summaries = describe_panel(panel, window);
  const Eigen::VectorXd total =
      panel.values().middleRows(static_cast<Eigen::Index>(window.begin), static_cast<Eigen::Index>(window.size()))
          .rowwise()
          .sum();
  t.rows.emplace_back("Total");
  t.summaries.push_back(describe_series({total.data(), static_cast<std::size_t>(total.size())}));
  t.window_label = panel.month(window.begin).to_string() + ".." + panel.month(window.end - 1).to_string();
  return t;
}

namespace {

constexpr const char* kDescribeColumns[] = {"Minimum", "Maximum", "Mean", "Standard deviation", "Skewness",
                                            "Kurtosis"};

std::vector<double> summary_values(const SeriesSummary& s) {
  return {s.minimum, s.maximum, s.mean, s.std_dev, s.skewness, s.kurtosis};
}

}  // namespace

void write_describe_csv(std::ostream& out, const DescribeTable& t) {
  out << "series";
  for (const char* c : kDescribeColumns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << t.rows[i];
    for (double v : summary_values(t.summaries[i])) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_describe_markdown(std::ostream& out, const DescribeTable& t) {
  out << "Descriptive statistics (" << t.window_label << ")\n\n| Series |";
  for (const char* c : kDescribeColumns) out << ' ' << c << " |";
  out << "\n|---|---:|---:|---:|---:|---:|---:|\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto v = summary_values(t.summaries[i]);
    out << "| " << t.rows[i] << " | " << fixed(v[0], 1) << " | " << fixed(v[1], 1) << " | " << fixed(v[2], 1)
        << " | " << fixed(v[3], 1) << " | " << fixed(v[4], 2) << " | " << fixed(v[5], 2) << " |\n";
  }
  out << "\nStandard deviation uses the n-1 divisor; kurtosis is excess kurtosis.\n";
}

}  // namespace mimogpr
