#include "mimogpr/metrics.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "mimogpr/error.hpp"

namespace mimogpr {

namespace {

void check_pair(const ErrorSeries& a, const ErrorSeries& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size()) {
    throw Error("error series lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

double loss_of(double e, DmLoss loss) { return loss == DmLoss::Absolute ? std::abs(e) : e * e; }

}  // namespace

ErrorSeries ErrorSeries::from_forecasts(const Eigen::VectorXd& actuals, const Eigen::VectorXd& forecasts,
                                        int horizon) {
  if (actuals.size() != forecasts.size()) throw Error("actuals/forecasts length mismatch");
  ErrorSeries es{actuals - forecasts, actuals, horizon};
  es.validate();
  return es;
}

void ErrorSeries::validate() const {
  if (errors.size() < 1) throw Error("error series is empty");
  if (errors.size() != actuals.size()) throw Error("errors/actuals length mismatch");
  if (!errors.allFinite() || !actuals.allFinite()) throw Error("non-finite forecast errors");
  if (horizon < 1) throw Error("horizon must be >= 1");
}

double mape(const ErrorSeries& es) {
  es.validate();
  double sum = 0.0;
  for (Eigen::Index t = 0; t < es.errors.size(); ++t) {
    if (es.actuals(t) == 0.0) throw Error("MAPE undefined: zero actual at period " + std::to_string(t + 1));
    sum += std::abs(es.errors(t) / es.actuals(t));
  }
  return 100.0 * sum / static_cast<double>(es.errors.size());
}

double rmape(const ErrorSeries& candidate, const ErrorSeries& benchmark) {
  check_pair(candidate, benchmark);
  const double base = mape(benchmark);
  if (base == 0.0) throw Error("rMAPE undefined: benchmark MAPE is zero");
  return mape(candidate) / base;
}

double dm_test(const ErrorSeries& a, const ErrorSeries& b, int horizon, DmLoss loss) {
  check_pair(a, b);
  if (horizon < 1) throw Error("horizon must be >= 1");
  const Eigen::Index n = a.errors.size();
  if (n < 2) throw Error("DM test needs at least 2 periods");
  Eigen::VectorXd d(n);
  for (Eigen::Index t = 0; t < n; ++t) d(t) = loss_of(a.errors(t), loss) - loss_of(b.errors(t), loss);
  const double mean = d.mean();
  const Eigen::VectorXd centered = d.array() - mean;
  const double nn = static_cast<double>(n);
  double variance = centered.squaredNorm() / nn;
  for (int k = 1; k < horizon && k < n; ++k) {
    const double autocov = centered.tail(n - k).dot(centered.head(n - k)) / nn;
    variance += 2.0 * (1.0 - static_cast<double>(k) / horizon) * autocov;
  }
  if (!(variance > 0.0)) throw Error("identical losses: DM test undefined (zero long-run variance)");
  return mean / std::sqrt(variance / nn);
}

double mdm_factor(std::size_t n, int horizon) {
  if (horizon < 1) throw Error("horizon must be >= 1");
  if (n <= static_cast<std::size_t>(horizon)) {
    throw Error("M-DM needs more periods than the horizon (n=" + std::to_string(n) + ", h=" +
                std::to_string(horizon) + ")");
  }
  const double nn = static_cast<double>(n);
  const double h = horizon;
  return std::sqrt((nn + 1.0 - 2.0 * h + h * (h - 1.0) / nn) / nn);
}

double mdm_test(double dm_stat, std::size_t n, int horizon) { return dm_stat * mdm_factor(n, horizon); }

double plae(const ErrorSeries& a, const ErrorSeries& b) {
  check_pair(a, b);
  std::size_t wins = 0;
  for (Eigen::Index t = 0; t < a.errors.size(); ++t) {
    if (std::abs(a.errors(t)) < std::abs(b.errors(t))) ++wins;
  }
  return 100.0 * static_cast<double>(wins) / static_cast<double>(a.size());
}

double student_t_critical(std::size_t n, double alpha) {
  if (n < 2) throw Error("t critical value needs n >= 2");
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

ComparisonResult compare(const ErrorSeries& candidate, const ErrorSeries& benchmark, DmLoss loss) {
  check_pair(candidate, benchmark);
  ComparisonResult r;
  r.n = candidate.size();
  r.rmape = rmape(candidate, benchmark);
  r.plae_pct = plae(candidate, benchmark);
  r.t_critical = r.n >= 2 ? student_t_critical(r.n) : 0.0;
  try {
    r.dm_stat = dm_test(candidate, benchmark, candidate.horizon, loss);
    r.mdm_stat = mdm_test(r.dm_stat, r.n, candidate.horizon);
  } catch (const Error&) {
    r.dm_defined = false;
    r.dm_stat = std::nan("");
    r.mdm_stat = std::nan("");
  }
  return r;
}

}  // namespace mimogpr
