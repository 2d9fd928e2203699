#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mimogpr/gpr.hpp"
#include "mimogpr/timeseries.hpp"

namespace mimogpr {

/// A fitted one-step model for a single series. Windows are raw values, most
/// recent lag first; forecasts are in raw units.
class SeriesForecaster {
 public:
  virtual ~SeriesForecaster() = default;
  virtual double forecast(std::span<const double> window) const = 0;
  virtual int lags() const = 0;
};

class GprForecaster final : public SeriesForecaster {
 public:
  explicit GprForecaster(GprModel model) : model_(std::move(model)) {}
  double forecast(std::span<const double> window) const override { return mimogpr::forecast(model_, window); }
  int lags() const override { return model_.lags(); }
  const GprModel& model() const { return model_; }

 private:
  GprModel model_;
};

using SeriesModels = std::vector<std::shared_ptr<const SeriesForecaster>>;

SeriesModels wrap_gpr(std::vector<GprModel> models);

/// Per-series one-step forecasts F (row t = f_t) over a row range of a panel,
/// paired with the realized rows Y.
struct FirstStageMatrix {
  Eigen::MatrixXd forecasts;
  Eigen::MatrixXd targets;
  RowRange rows;

  std::size_t size() const { return static_cast<std::size_t>(forecasts.rows()); }
  FirstStageMatrix slice(std::size_t begin, std::size_t end) const;
};

// Cells are independent and evaluated in parallel.
FirstStageMatrix build_first_stage(const SeriesModels& models, const TimeSeriesPanel& panel, RowRange fit_range,
                                   int lags);
FirstStageMatrix build_first_stage_serial(const SeriesModels& models, const TimeSeriesPanel& panel,
                                          RowRange fit_range, int lags);
FirstStageMatrix build_first_stage(std::span<const GprModel> models, const TimeSeriesPanel& panel,
                                   RowRange fit_range, int lags);

/// Second-stage map y = W [f; 1]. W is M x (M+1); the last column is the
/// intercept.
struct CombinerWeights {
  Eigen::MatrixXd weights;
  double ridge_penalty = 0.0;

  std::size_t series_count() const { return static_cast<std::size_t>(weights.rows()); }
  static CombinerWeights identity(std::size_t series);
};

// Ridge solution W = Y' F~ (F~'F~ + penalty D)^-1 with D = diag(1,...,1,0):
// the intercept is not penalized. Solved as the augmented least-squares
// problem [F~; sqrt(penalty) D] w = [y; 0] by column-pivoting QR.
CombinerWeights fit_combiner(const FirstStageMatrix& stage, double ridge_penalty);

Eigen::VectorXd combine(const CombinerWeights& weights, const Eigen::VectorXd& first_stage);

std::vector<double> default_penalty_grid();

// Penalty minimizing validation MSE of combiner fits on `train`; ties go to the
// larger penalty.
double select_ridge_penalty(const FirstStageMatrix& train, const FirstStageMatrix& valid,
                            std::span<const double> grid);

/// Selects a penalty on the held-out tail of `stage` (the last
/// `holdout_fraction` of rows, at least one row) and refits on all rows.
CombinerWeights fit_combiner_selected(const FirstStageMatrix& stage, std::span<const double> grid,
                                      double holdout_fraction = 0.25);

/// Per-series models plus the combiner(s) that form one MIMO forecaster.
///
/// Without a combiner the forecaster is the independent per-series model set.
/// With per-step combiners, recursive step k (1-based) uses step_combiners[k-1]
/// and the last one beyond that.
struct MimoForecaster {
  SeriesModels models;
  std::vector<CombinerWeights> step_combiners;

  int lags() const;
  std::size_t series_count() const { return models.size(); }
  bool combined() const { return !step_combiners.empty(); }
  const CombinerWeights* combiner_for_step(int step) const;

  Eigen::VectorXd first_stage(std::span<const std::vector<double>> windows) const;
  // First stage followed by the step's combiner (identity when none).
  Eigen::VectorXd one_step(std::span<const std::vector<double>> windows, int step = 1) const;
};

}  // namespace mimogpr
