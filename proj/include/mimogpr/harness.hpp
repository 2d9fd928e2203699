#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mimogpr/gpr.hpp"
#include "mimogpr/mimo.hpp"
#include "mimogpr/mlp.hpp"
#include "mimogpr/timeseries.hpp"

namespace mimogpr {

enum class ModelKind { MimoGpr, MimoMlp, IndependentGpr };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

enum class RefitPolicy { FitOnce, RefitEachOrigin };

struct ExperimentConfig {
  int lags = 12;
  SplitSpec split;
  std::vector<int> horizons{1, 2, 3, 6};
  std::vector<ModelKind> models{ModelKind::MimoGpr, ModelKind::MimoMlp, ModelKind::IndependentGpr};
  std::uint64_t seed = 0;
  RefitPolicy refit = RefitPolicy::FitOnce;
  // Forecast origins. Default: every test month whose longest-horizon target
  // is still inside the panel.
  std::optional<RowRange> eval_window;
  FitConfig gpr;
  TrainConfig mlp;
  std::vector<double> penalty_grid = default_penalty_grid();
  double penalty_holdout = 0.25;
  bool per_horizon_combiner = false;
  bool parallel = true;

  void validate(std::size_t panel_rows) const;
  RowRange resolved_window(std::size_t panel_rows) const;
};

/// One h-step forecast. The forecast is issued at `origin` with panel rows
/// [0, origin) known and targets month origin + h - 1.
struct ForecastRecord {
  ModelKind model = ModelKind::MimoGpr;
  std::size_t series = 0;
  std::size_t origin = 0;
  int horizon = 1;
  double forecast = 0.0;
  std::optional<double> actual;
  // One past the last panel row that informed the forecast (lag windows and
  // model fitting).
  std::size_t info_end = 0;

  std::size_t target() const { return origin + static_cast<std::size_t>(horizon) - 1; }
};

/// Provenance of each slot of a lag window during a recursion: a value >= 0 is
/// a panel row, a value -k is the forecast produced at recursive step k.
using WindowTrace = std::vector<std::vector<long>>;

/// Iterated multi-step forecast. `history[s]` holds series s in chronological
/// order (at least p values); `history_end` is the panel row one past its last
/// value and only labels the trace. Returns the M-vector of every step 1..h.
std::vector<Eigen::VectorXd> recursive_forecast(const MimoForecaster& forecaster,
                                                std::span<const std::span<const double>> history, int horizon,
                                                WindowTrace* trace = nullptr, std::size_t history_end = 0);

// Convenience: history = panel rows [0, origin).
std::vector<Eigen::VectorXd> recursive_forecast(const MimoForecaster& forecaster, const TimeSeriesPanel& panel,
                                                std::size_t origin, int horizon, WindowTrace* trace = nullptr);

/// Models fitted once on the chronological split.
struct FittedModels {
  std::vector<GprModel> gpr;
  CombinerWeights gpr_combiner;
  std::vector<CombinerWeights> gpr_step_combiners;
  // MLP per horizon: networks and combiner(s).
  struct MlpSet {
    int horizon = 1;
    std::vector<MlpForecaster> nets;
    std::vector<CombinerWeights> combiners;
  };
  std::vector<MlpSet> mlp;
  SplitRanges split;
  int lags = 12;

  MimoForecaster gpr_forecaster(bool combined) const;
  MimoForecaster mlp_forecaster(int horizon) const;
};

// Fits the per-series GPRs (train segment) and their combiner (validation
// segment); with `with_mlp`, the per-horizon MLPs and their combiners as well.
FittedModels fit_models(const TimeSeriesPanel& panel, const ExperimentConfig& config, bool with_gpr = true,
                        bool with_mlp = true);

/// Rolling-origin evaluation: for every origin in the window, model and
/// horizon, the recursive forecast made from rows [0, origin). Records are
/// sorted by (model, series, origin, horizon).
std::vector<ForecastRecord> rolling_evaluate(const TimeSeriesPanel& panel, const ExperimentConfig& config);
std::vector<ForecastRecord> rolling_evaluate(const TimeSeriesPanel& panel, const ExperimentConfig& config,
                                             const FittedModels& fitted);

struct SyntheticSpec {
  std::size_t series = 4;
  std::size_t months = 183;
  double level = 100.0;
  double amplitude = 20.0;
  double trend = 0.1;
  double rho = 0.7;
  double noise_std = 3.0;
  std::uint64_t seed = 42;
  YearMonth start{1999, 1};

  void validate() const;
  // Seasonal phase of series s.
  double phase(std::size_t s) const;
};

/// level + trend t + amplitude sin(2 pi t / 12 + phase_s) + eps_{t,s}, where
/// eps_t is Gaussian with unit-diagonal correlation rho between every pair of
/// series, scaled by noise_std, and independent across months.
TimeSeriesPanel generate_synthetic_panel(const SyntheticSpec& spec);

}  // namespace mimogpr
