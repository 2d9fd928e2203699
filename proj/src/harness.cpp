#include "mimogpr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <omp.h>

#include "mimogpr/error.hpp"
#include "mimogpr/rng.hpp"

namespace mimogpr {

namespace {

// Seed streams: split_seed(split_seed(seed, tag), series).
constexpr std::uint64_t kGprStream = 1;
constexpr std::uint64_t kMlpStreamBase = 100;  // + horizon
constexpr std::uint64_t kRefitStreamBase = 1000;  // + origin

std::uint64_t series_seed(std::uint64_t seed, std::uint64_t tag, std::size_t series) {
  return split_seed(split_seed(seed, tag), series);
}

// Lag windows (most recent first) for every series, initialized from the
// chronological history.
struct RecursionState {
  std::vector<std::vector<double>> windows;
  std::vector<long> labels;  // provenance shared by all series

  RecursionState(std::span<const std::span<const double>> history, int lags, std::size_t history_end) {
    windows.resize(history.size());
    for (std::size_t s = 0; s < history.size(); ++s) {
      if (history[s].size() < static_cast<std::size_t>(lags)) {
        throw Error("insufficient history: series " + std::to_string(s) + " has " +
                    std::to_string(history[s].size()) + " values, " + std::to_string(lags) + " lags required");
      }
      auto& w = windows[s];
      w.resize(static_cast<std::size_t>(lags));
      const std::size_t len = history[s].size();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = history[s][len - 1 - i];
    }
    labels.resize(static_cast<std::size_t>(lags));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = static_cast<long>(history_end) - 1 - static_cast<long>(i);
    }
  }

  void push(const Eigen::VectorXd& values, int step) {
    for (std::size_t s = 0; s < windows.size(); ++s) {
      auto& w = windows[s];
      std::rotate(w.rbegin(), w.rbegin() + 1, w.rend());
      w.front() = values(static_cast<Eigen::Index>(s));
    }
    std::rotate(labels.rbegin(), labels.rbegin() + 1, labels.rend());
    labels.front() = -step;
  }
};

std::vector<std::span<const double>> panel_history(const TimeSeriesPanel& panel, std::size_t end) {
  std::vector<std::span<const double>> h;
  for (std::size_t s = 0; s < panel.series_count(); ++s) h.push_back(panel.series(s).first(end));
  return h;
}

// Combiners for recursive steps 1..max_step fitted on the validation segment.
// Step k's first-stage rows come from recursions over k-1 steps that use the
// combiners already fitted for the earlier steps.
std::vector<CombinerWeights> fit_step_combiners(const SeriesModels& models, const TimeSeriesPanel& panel,
                                                RowRange valid, int lags, int max_step,
                                                const ExperimentConfig& config) {
  std::vector<CombinerWeights> combiners;
  combiners.push_back(
      fit_combiner_selected(build_first_stage(models, panel, valid, lags), config.penalty_grid,
                            config.penalty_holdout));
  if (!config.per_horizon_combiner) return combiners;

  for (int step = 2; step <= max_step; ++step) {
    MimoForecaster partial{models, combiners};
    const std::size_t span = valid.size() >= static_cast<std::size_t>(step) ? valid.size() - step + 1 : 0;
    const auto m = static_cast<Eigen::Index>(panel.series_count());
    FirstStageMatrix stage;
    stage.rows = {valid.begin + static_cast<std::size_t>(step) - 1, valid.end};
    stage.forecasts.resize(static_cast<Eigen::Index>(span), m);
    stage.targets.resize(static_cast<Eigen::Index>(span), m);
    for (std::size_t r = 0; r < span; ++r) {
      const std::size_t origin = valid.begin + r;
      const auto history = panel_history(panel, origin);
      RecursionState state(history, lags, origin);
      for (int k = 1; k < step; ++k) state.push(partial.one_step(state.windows, k), k);
      stage.forecasts.row(static_cast<Eigen::Index>(r)) = partial.first_stage(state.windows).transpose();
      stage.targets.row(static_cast<Eigen::Index>(r)) =
          panel.values().row(static_cast<Eigen::Index>(origin + static_cast<std::size_t>(step) - 1));
    }
    combiners.push_back(fit_combiner_selected(stage, config.penalty_grid, config.penalty_holdout));
  }
  return combiners;
}

SupervisedDataset training_rows(std::span<const double> series, int lags, RowRange train, RowRange extra) {
  SupervisedDataset d = embed_range(series, lags, {static_cast<std::size_t>(lags), train.end});
  if (!extra.empty()) d = concat(d, embed_range(series, lags, extra));
  return d;
}

bool has_model(const ExperimentConfig& config, ModelKind kind) {
  return std::find(config.models.begin(), config.models.end(), kind) != config.models.end();
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::MimoGpr:
      return "mimo-gpr";
    case ModelKind::MimoMlp:
      return "mimo-mlp";
    case ModelKind::IndependentGpr:
      return "independent-gpr";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::MimoGpr, ModelKind::MimoMlp, ModelKind::IndependentGpr}) {
    if (name == to_string(k)) return k;
  }
  throw Error("unknown model '" + std::string(name) + "' (expected mimo-gpr, mimo-mlp or independent-gpr)");
}

RowRange ExperimentConfig::resolved_window(std::size_t panel_rows) const {
  const SplitRanges ranges = mimogpr::split(panel_rows, split, lags);
  if (eval_window) return *eval_window;
  const int max_h = horizons.empty() ? 1 : *std::max_element(horizons.begin(), horizons.end());
  const std::size_t last_origin_end = panel_rows + 1 >= static_cast<std::size_t>(max_h)
                                          ? panel_rows + 1 - static_cast<std::size_t>(max_h)
                                          : 0;
  return {ranges.test.begin, std::max(ranges.test.begin, std::min(ranges.test.end, last_origin_end))};
}

void ExperimentConfig::validate(std::size_t panel_rows) const {
  if (lags < 1) throw Error("lag order must be >= 1");
  if (horizons.empty()) throw Error("at least one horizon is required");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw Error("horizons must be positive");
    if (i > 0 && horizons[i] <= horizons[i - 1]) throw Error("horizons must be sorted and unique");
  }
  if (models.empty()) throw Error("at least one model is required");
  if (std::set<ModelKind>(models.begin(), models.end()).size() != models.size()) throw Error("duplicate model");
  if (penalty_grid.empty()) throw Error("empty ridge penalty grid");
  gpr.validate();
  mlp.validate();
  const SplitRanges ranges = mimogpr::split(panel_rows, split, lags);
  const RowRange window = resolved_window(panel_rows);
  if (window.empty()) throw Error("evaluation window is empty");
  if (window.begin < ranges.test.begin || window.end > ranges.test.end) {
    throw Error("evaluation window [" + std::to_string(window.begin) + ", " + std::to_string(window.end) +
                ") lies outside the test range [" + std::to_string(ranges.test.begin) + ", " +
                std::to_string(ranges.test.end) + ")");
  }
}

std::vector<Eigen::VectorXd> recursive_forecast(const MimoForecaster& forecaster,
                                                std::span<const std::span<const double>> history, int horizon,
                                                WindowTrace* trace, std::size_t history_end) {
  if (horizon < 1) throw Error("forecast horizon must be >= 1");
  if (history.size() != forecaster.series_count()) throw Error("history must hold one series per model");
  RecursionState state(history, forecaster.lags(), history_end);
  std::vector<Eigen::VectorXd> steps;
  steps.reserve(static_cast<std::size_t>(horizon));
  if (trace) trace->clear();
  for (int k = 1; k <= horizon; ++k) {
    if (trace) trace->push_back(state.labels);
    steps.push_back(forecaster.one_step(state.windows, k));
    state.push(steps.back(), k);
  }
  return steps;
}

std::vector<Eigen::VectorXd> recursive_forecast(const MimoForecaster& forecaster, const TimeSeriesPanel& panel,
                                                std::size_t origin, int horizon, WindowTrace* trace) {
  if (origin > panel.rows()) throw Error("forecast origin beyond the panel");
  const auto history = panel_history(panel, origin);
  return recursive_forecast(forecaster, history, horizon, trace, origin);
}

MimoForecaster FittedModels::gpr_forecaster(bool combined) const {
  MimoForecaster f;
  f.models = wrap_gpr(gpr);
  if (combined) f.step_combiners = gpr_step_combiners.empty() ? std::vector{gpr_combiner} : gpr_step_combiners;
  return f;
}

MimoForecaster FittedModels::mlp_forecaster(int horizon) const {
  for (const auto& set : mlp) {
    if (set.horizon != horizon) continue;
    MimoForecaster f;
    for (const auto& net : set.nets) f.models.push_back(std::make_shared<MlpForecaster>(net));
    f.step_combiners = set.combiners;
    return f;
  }
  throw Error("no MLP fitted for horizon " + std::to_string(horizon));
}

FittedModels fit_models(const TimeSeriesPanel& panel, const ExperimentConfig& config, bool with_gpr,
                        bool with_mlp) {
  config.validate(panel.rows());
  FittedModels out;
  out.lags = config.lags;
  out.split = split(panel, config.split, config.lags);
  const int lags = config.lags;
  const auto m = static_cast<std::ptrdiff_t>(panel.series_count());
  const int max_h = config.horizons.back();

  if (with_gpr) {
    std::vector<std::optional<GprModel>> models(static_cast<std::size_t>(m));
    std::vector<std::string> errors(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic) if (config.parallel)
    for (std::ptrdiff_t s = 0; s < m; ++s) {
      const auto su = static_cast<std::size_t>(s);
      try {
        FitConfig cfg = config.gpr;
        cfg.seed = series_seed(config.seed, kGprStream, su);
        models[su] = fit_series(training_rows(panel.series(su), lags, out.split.train, {}), cfg);
      } catch (const std::exception& e) {
        errors[su] = "series '" + panel.names()[su] + "': " + e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw Error(e);
    }
    for (auto& model : models) out.gpr.push_back(std::move(*model));
    const auto combiners =
        fit_step_combiners(wrap_gpr(out.gpr), panel, out.split.valid, lags, max_h, config);
    out.gpr_combiner = combiners.front();
    if (config.per_horizon_combiner) out.gpr_step_combiners = combiners;
  }

  if (with_mlp) {
    for (int h : config.horizons) {
      FittedModels::MlpSet set;
      set.horizon = h;
      const int hidden = hidden_units_for_horizon(h);
      std::vector<std::optional<MlpForecaster>> nets(static_cast<std::size_t>(m));
      std::vector<std::string> errors(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic) if (config.parallel)
      for (std::ptrdiff_t s = 0; s < m; ++s) {
        const auto su = static_cast<std::size_t>(s);
        try {
          const auto series = panel.series(su);
          const SupervisedDataset raw = training_rows(series, lags, out.split.train, {});
          Standardizer standardizer = fit_standardizer(raw);
          TrainConfig cfg = config.mlp;
          cfg.seed = series_seed(config.seed, kMlpStreamBase + static_cast<std::uint64_t>(h), su);
          const TrainResult trained = train_lm(standardizer.apply(raw),
                                               standardizer.apply(embed_range(series, lags, out.split.valid)),
                                               hidden, cfg);
          nets[su].emplace(trained.params, standardizer);
        } catch (const std::exception& e) {
          errors[su] = "series '" + panel.names()[su] + "': " + e.what();
        }
      }
      for (const auto& e : errors) {
        if (!e.empty()) throw Error(e);
      }
      SeriesModels models;
      for (auto& net : nets) {
        set.nets.push_back(*net);
        models.push_back(std::make_shared<MlpForecaster>(*net));
      }
      set.combiners = fit_step_combiners(models, panel, out.split.valid, lags, h, config);
      out.mlp.push_back(std::move(set));
    }
  }
  return out;
}

std::vector<ForecastRecord> rolling_evaluate(const TimeSeriesPanel& panel, const ExperimentConfig& config) {
  const bool gpr = has_model(config, ModelKind::MimoGpr) || has_model(config, ModelKind::IndependentGpr);
  return rolling_evaluate(panel, config, fit_models(panel, config, gpr, has_model(config, ModelKind::MimoMlp)));
}

std::vector<ForecastRecord> rolling_evaluate(const TimeSeriesPanel& panel, const ExperimentConfig& config,
                                             const FittedModels& fitted) {
  config.validate(panel.rows());
  const RowRange window = config.resolved_window(panel.rows());
  const int lags = config.lags;
  const int max_h = config.horizons.back();
  const std::size_t m = panel.series_count();
  const bool refit = config.refit == RefitPolicy::RefitEachOrigin;
  // Fitting consumed the validation segment (combiners, early stopping).
  const std::size_t fit_end = fitted.split.valid.end;

  const auto n_origins = static_cast<std::ptrdiff_t>(window.size());
  std::vector<std::vector<ForecastRecord>> per_origin(static_cast<std::size_t>(n_origins));
  std::vector<std::string> errors(static_cast<std::size_t>(n_origins));

#pragma omp parallel for schedule(dynamic) if (config.parallel)
  for (std::ptrdiff_t oi = 0; oi < n_origins; ++oi) {
    const std::size_t origin = window.begin + static_cast<std::size_t>(oi);
    auto& records = per_origin[static_cast<std::size_t>(oi)];
    const RowRange extra = refit ? RowRange{window.begin, origin} : RowRange{};
    try {
      auto emit = [&](ModelKind kind, int h, const Eigen::VectorXd& values) {
        for (std::size_t s = 0; s < m; ++s) {
          ForecastRecord r;
          r.model = kind;
          r.series = s;
          r.origin = origin;
          r.horizon = h;
          r.forecast = values(static_cast<Eigen::Index>(s));
          if (r.target() < panel.rows()) {
            r.actual = panel.values()(static_cast<Eigen::Index>(r.target()), static_cast<Eigen::Index>(s));
          }
          r.info_end = std::max(fit_end, origin);
          records.push_back(r);
        }
      };

      for (ModelKind kind : config.models) {
        if (kind == ModelKind::MimoMlp) continue;
        MimoForecaster f = fitted.gpr_forecaster(kind == ModelKind::MimoGpr);
        if (!extra.empty()) {
          std::vector<GprModel> refitted;
          for (std::size_t s = 0; s < m; ++s) {
            const GprModel& base = fitted.gpr[s];
            const SupervisedDataset raw = training_rows(panel.series(s), lags, fitted.split.train, extra);
            refitted.push_back(GprModel::condition(base.standardizer().apply(raw), base.hyperparams(),
                                                   base.standardizer(), {base.jitter(), 1e-4}));
          }
          f.models = wrap_gpr(std::move(refitted));
        }
        const auto steps = recursive_forecast(f, panel, origin, max_h);
        for (int h : config.horizons) emit(kind, h, steps[static_cast<std::size_t>(h) - 1]);
      }

      if (std::find(config.models.begin(), config.models.end(), ModelKind::MimoMlp) != config.models.end()) {
        for (int h : config.horizons) {
          MimoForecaster f = fitted.mlp_forecaster(h);
          if (!extra.empty()) {
            const auto& set = *std::find_if(fitted.mlp.begin(), fitted.mlp.end(),
                                            [h](const auto& x) { return x.horizon == h; });
            f.models.clear();
            for (std::size_t s = 0; s < m; ++s) {
              const auto& net = set.nets[s];
              const auto series = panel.series(s);
              TrainConfig cfg = config.mlp;
              cfg.restarts = 1;
              cfg.seed = series_seed(config.seed, kRefitStreamBase + origin, s);
              const TrainResult warm =
                  train_lm(net.standardizer().apply(training_rows(series, lags, fitted.split.train, extra)),
                           net.standardizer().apply(embed_range(series, lags, fitted.split.valid)),
                           net.params().hidden(), cfg, &net.params());
              f.models.push_back(std::make_shared<MlpForecaster>(warm.params, net.standardizer()));
            }
          }
          const auto steps = recursive_forecast(f, panel, origin, h);
          emit(ModelKind::MimoMlp, h, steps.back());
        }
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(oi)] = "origin " + panel.month(origin).to_string() + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }

  std::vector<ForecastRecord> out;
  for (auto& r : per_origin) out.insert(out.end(), r.begin(), r.end());
  std::sort(out.begin(), out.end(), [](const ForecastRecord& a, const ForecastRecord& b) {
    return std::tie(a.model, a.series, a.origin, a.horizon) < std::tie(b.model, b.series, b.origin, b.horizon);
  });
  return out;
}

void SyntheticSpec::validate() const {
  if (series < 1) throw Error("synthetic panel needs at least one series");
  if (months < 48) throw Error("synthetic panel needs at least 48 months");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error("innovation correlation rho must lie in [0, 1)");
  if (!(noise_std >= 0.0) || !std::isfinite(level) || !std::isfinite(amplitude) || !std::isfinite(trend)) {
    throw Error("invalid synthetic panel parameters");
  }
}

double SyntheticSpec::phase(std::size_t s) const {
  return 2.0 * std::numbers::pi * static_cast<double>(s) / (4.0 * static_cast<double>(series));
}

TimeSeriesPanel generate_synthetic_panel(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(split_seed(spec.seed, 0));
  const auto n = static_cast<Eigen::Index>(spec.months);
  const auto m = static_cast<Eigen::Index>(spec.series);
  const double shared = std::sqrt(spec.rho);
  const double own = std::sqrt(1.0 - spec.rho);
  Eigen::MatrixXd values(n, m);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double common = rng.normal();
    for (Eigen::Index s = 0; s < m; ++s) {
      const double eps = spec.noise_std * (shared * common + own * rng.normal());
      const double seasonal =
          spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 12.0 +
                                    spec.phase(static_cast<std::size_t>(s)));
      values(t, s) = spec.level + spec.trend * static_cast<double>(t) + seasonal + eps;
    }
  }
  std::vector<std::string> names;
  for (std::size_t s = 0; s < spec.series; ++s) names.push_back("S" + std::to_string(s + 1));
  return TimeSeriesPanel(spec.start, std::move(names), std::move(values));
}

}  // namespace mimogpr
