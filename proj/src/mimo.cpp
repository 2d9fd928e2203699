#include "mimogpr/mimo.hpp"

#include <cmath>
#include <limits>

#include <omp.h>

#include "mimogpr/error.hpp"

namespace mimogpr {

namespace {

void check_first_stage_inputs(const SeriesModels& models, const TimeSeriesPanel& panel, RowRange range, int lags) {
  if (models.size() != panel.series_count()) {
    throw Error("model/panel series mismatch: " + std::to_string(models.size()) + " models for " +
                std::to_string(panel.series_count()) + " series");
  }
  for (std::size_t s = 0; s < models.size(); ++s) {
    if (!models[s]) throw Error("missing model for series '" + panel.names()[s] + "'");
    if (models[s]->lags() != lags) throw Error("model for series '" + panel.names()[s] + "' has a different lag order");
  }
  if (range.empty()) throw Error("first-stage range is empty");
  if (range.begin < static_cast<std::size_t>(lags)) throw Error("first-stage range starts inside the first p months");
  if (range.end > panel.rows()) throw Error("first-stage range extends beyond the panel");
}

double first_stage_cell(const SeriesModels& models, const TimeSeriesPanel& panel, std::size_t t, std::size_t s,
                        int lags) {
  std::vector<double> window(static_cast<std::size_t>(lags));
  const auto series = panel.series(s);
  for (std::size_t i = 0; i < window.size(); ++i) window[i] = series[t - 1 - i];
  return models[s]->forecast(window);
}

FirstStageMatrix empty_stage(const TimeSeriesPanel& panel, RowRange range) {
  FirstStageMatrix stage;
  stage.rows = range;
  const auto n = static_cast<Eigen::Index>(range.size());
  const auto m = static_cast<Eigen::Index>(panel.series_count());
  stage.forecasts.resize(n, m);
  stage.targets = panel.values().middleRows(static_cast<Eigen::Index>(range.begin), n);
  return stage;
}

Eigen::MatrixXd augmented(const Eigen::MatrixXd& f) {
  Eigen::MatrixXd out(f.rows(), f.cols() + 1);
  out << f, Eigen::VectorXd::Ones(f.rows());
  return out;
}

double combined_mse(const CombinerWeights& w, const FirstStageMatrix& stage) {
  const Eigen::MatrixXd predicted = augmented(stage.forecasts) * w.weights.transpose();
  return (predicted - stage.targets).squaredNorm() / static_cast<double>(stage.targets.size());
}

}  // namespace

SeriesModels wrap_gpr(std::vector<GprModel> models) {
  SeriesModels out;
  out.reserve(models.size());
  for (auto& m : models) out.push_back(std::make_shared<GprForecaster>(std::move(m)));
  return out;
}

FirstStageMatrix FirstStageMatrix::slice(std::size_t begin, std::size_t end) const {
  if (end > size() || begin >= end) throw Error("invalid first-stage slice");
  FirstStageMatrix out;
  const auto b = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(end - begin);
  out.forecasts = forecasts.middleRows(b, n);
  out.targets = targets.middleRows(b, n);
  out.rows = {rows.begin + begin, rows.begin + end};
  return out;
}

FirstStageMatrix build_first_stage(const SeriesModels& models, const TimeSeriesPanel& panel, RowRange range,
                                   int lags) {
  check_first_stage_inputs(models, panel, range, lags);
  FirstStageMatrix stage = empty_stage(panel, range);
  const auto n = static_cast<std::ptrdiff_t>(range.size());
  const auto m = static_cast<std::ptrdiff_t>(panel.series_count());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    for (std::ptrdiff_t s = 0; s < m; ++s) {
      stage.forecasts(r, s) = first_stage_cell(models, panel, range.begin + static_cast<std::size_t>(r),
                                               static_cast<std::size_t>(s), lags);
    }
  }
  return stage;
}

FirstStageMatrix build_first_stage_serial(const SeriesModels& models, const TimeSeriesPanel& panel, RowRange range,
                                          int lags) {
  check_first_stage_inputs(models, panel, range, lags);
  FirstStageMatrix stage = empty_stage(panel, range);
  for (std::size_t r = 0; r < range.size(); ++r) {
    for (std::size_t s = 0; s < panel.series_count(); ++s) {
      stage.forecasts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
          first_stage_cell(models, panel, range.begin + r, s, lags);
    }
  }
  return stage;
}

FirstStageMatrix build_first_stage(std::span<const GprModel> models, const TimeSeriesPanel& panel, RowRange range,
                                   int lags) {
  return build_first_stage(wrap_gpr({models.begin(), models.end()}), panel, range, lags);
}

CombinerWeights CombinerWeights::identity(std::size_t series) {
  const auto m = static_cast<Eigen::Index>(series);
  CombinerWeights w;
  w.weights = Eigen::MatrixXd::Zero(m, m + 1);
  w.weights.leftCols(m).setIdentity();
  return w;
}

CombinerWeights fit_combiner(const FirstStageMatrix& stage, double ridge_penalty) {
  if (!(ridge_penalty >= 0.0) || !std::isfinite(ridge_penalty)) throw Error("ridge penalty must be finite and >= 0");
  const Eigen::Index n = stage.forecasts.rows();
  const Eigen::Index m = stage.forecasts.cols();
  if (stage.targets.rows() != n || stage.targets.cols() != m) throw Error("first-stage forecasts/targets shape mismatch");
  if (n < m + 1) {
    throw Error("combiner needs at least " + std::to_string(m + 1) + " rows, got " + std::to_string(n));
  }
  if (!stage.forecasts.allFinite() || !stage.targets.allFinite()) throw Error("non-finite first-stage values");

  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n + m, m + 1);
  design.topRows(n) = augmented(stage.forecasts);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + m, m);
  rhs.topRows(n) = stage.targets;
  const bool penalized = ridge_penalty > 0.0;
  if (penalized) design.bottomLeftCorner(m, m).diagonal().setConstant(std::sqrt(ridge_penalty));

  const Eigen::Index rows = penalized ? n + m : n;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.topRows(rows));
  if (qr.rank() < m + 1) {
    throw Error("singular combiner normal equations (rank " + std::to_string(qr.rank()) + " < " +
                std::to_string(m + 1) + "); use a positive ridge penalty");
  }
  CombinerWeights w;
  w.weights = qr.solve(rhs.topRows(rows)).transpose();
  w.ridge_penalty = ridge_penalty;
  if (!w.weights.allFinite()) throw Error("combiner weights are not finite");
  return w;
}

Eigen::VectorXd combine(const CombinerWeights& w, const Eigen::VectorXd& f) {
  const Eigen::Index m = w.weights.rows();
  if (f.size() != m || w.weights.cols() != m + 1) {
    throw Error("combiner expects " + std::to_string(m) + " first-stage values, got " + std::to_string(f.size()));
  }
  return w.weights.leftCols(m) * f + w.weights.col(m);
}

std::vector<double> default_penalty_grid() { return {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }

double select_ridge_penalty(const FirstStageMatrix& train, const FirstStageMatrix& valid,
                            std::span<const double> grid) {
  if (grid.empty()) throw Error("empty ridge penalty grid");
  double best_penalty = 0.0;
  double best_mse = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double penalty : grid) {
    if (!(penalty >= 0.0)) throw Error("ridge penalties must be nonnegative");
    double mse = 0.0;
    try {
      mse = combined_mse(fit_combiner(train, penalty), valid);
    } catch (const Error&) {
      continue;
    }
    if (!found || mse < best_mse || (mse == best_mse && penalty > best_penalty)) {
      best_mse = mse;
      best_penalty = penalty;
      found = true;
    }
  }
  if (!found) throw Error("no ridge penalty in the grid yields a solvable combiner");
  return best_penalty;
}

CombinerWeights fit_combiner_selected(const FirstStageMatrix& stage, std::span<const double> grid,
                                      double holdout_fraction) {
  if (grid.empty()) throw Error("empty ridge penalty grid");
  const std::size_t n = stage.size();
  const auto holdout = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(holdout_fraction * n)));
  if (grid.size() == 1 || holdout >= n) return fit_combiner(stage, grid.front());
  const double penalty = select_ridge_penalty(stage.slice(0, n - holdout), stage.slice(n - holdout, n), grid);
  return fit_combiner(stage, penalty);
}

int MimoForecaster::lags() const {
  if (models.empty() || !models.front()) throw Error("empty MIMO forecaster");
  return models.front()->lags();
}

const CombinerWeights* MimoForecaster::combiner_for_step(int step) const {
  if (step_combiners.empty()) return nullptr;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(step, 1)) - 1, step_combiners.size() - 1);
  return &step_combiners[k];
}

Eigen::VectorXd MimoForecaster::first_stage(std::span<const std::vector<double>> windows) const {
  if (windows.size() != models.size()) throw Error("forecaster expects one window per series");
  Eigen::VectorXd f(static_cast<Eigen::Index>(models.size()));
  for (std::size_t s = 0; s < models.size(); ++s) f(static_cast<Eigen::Index>(s)) = models[s]->forecast(windows[s]);
  return f;
}

Eigen::VectorXd MimoForecaster::one_step(std::span<const std::vector<double>> windows, int step) const {
  const Eigen::VectorXd f = first_stage(windows);
  const CombinerWeights* w = combiner_for_step(step);
  return w ? combine(*w, f) : f;
}

}  // namespace mimogpr
