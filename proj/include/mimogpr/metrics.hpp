#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace mimogpr {

/// Forecast errors e_t = y_t - yhat_t with the actuals kept for percentage
/// measures.
struct ErrorSeries {
  Eigen::VectorXd errors;
  Eigen::VectorXd actuals;
  int horizon = 1;

  static ErrorSeries from_forecasts(const Eigen::VectorXd& actuals, const Eigen::VectorXd& forecasts, int horizon);
  std::size_t size() const { return static_cast<std::size_t>(errors.size()); }
  void validate() const;
};

enum class DmLoss { Absolute, Squared };

// Mean absolute percentage error, in percent.
double mape(const ErrorSeries& es);
// MAPE(candidate) / MAPE(benchmark).
double rmape(const ErrorSeries& candidate, const ErrorSeries& benchmark);

/// Diebold-Mariano statistic for d_t = L(e_A,t) - L(e_B,t), long-run variance
/// by Newey-West with Bartlett weights 1 - k/h and truncation lag h - 1:
///   V = g0 + 2 sum_{k=1}^{h-1} (1 - k/h) g_k,   g_k = (1/n) sum_t (d_t - dbar)(d_{t-k} - dbar)
///   DM = dbar / sqrt(V / n)
/// Negative when A has the smaller losses.
double dm_test(const ErrorSeries& a, const ErrorSeries& b, int horizon, DmLoss loss = DmLoss::Absolute);

// Harvey-Leybourne-Newbold small-sample factor sqrt((n + 1 - 2h + h(h-1)/n) / n).
double mdm_factor(std::size_t n, int horizon);
double mdm_test(double dm_stat, std::size_t n, int horizon);

// Percentage of periods with |e_A| strictly below |e_B|.
double plae(const ErrorSeries& a, const ErrorSeries& b);

// Two-sided 5% Student-t critical value with n - 1 degrees of freedom.
double student_t_critical(std::size_t n, double alpha = 0.05);

inline constexpr double kReportedCriticalValue = 2.028;

struct ComparisonResult {
  double rmape = 0.0;
  double dm_stat = 0.0;
  double mdm_stat = 0.0;
  double plae_pct = 0.0;
  std::size_t n = 0;
  double critical_value = kReportedCriticalValue;
  double t_critical = 0.0;
  bool dm_defined = true;  // false when the loss differential has zero variance
};

ComparisonResult compare(const ErrorSeries& candidate, const ErrorSeries& benchmark, DmLoss loss = DmLoss::Absolute);

}  // namespace mimogpr
