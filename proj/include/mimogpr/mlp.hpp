#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mimogpr/mimo.hpp"
#include "mimogpr/timeseries.hpp"

namespace mimogpr {

/// Single-hidden-layer perceptron
///
///   y = beta0 + sum_j beta_j tanh(sum_i w_ji x_i + w0_j)
///
/// Flattened parameter order (used by the Jacobian and the LM solver):
/// input_weights row-major (q*p), hidden_bias (q), output_weights (q),
/// output_bias (1).
struct MlpParams {
  Eigen::MatrixXd input_weights;   // q x p
  Eigen::VectorXd hidden_bias;     // q
  Eigen::VectorXd output_weights;  // q
  double output_bias = 0.0;

  int hidden() const { return static_cast<int>(input_weights.rows()); }
  int inputs() const { return static_cast<int>(input_weights.cols()); }
  Eigen::Index parameter_count() const { return input_weights.size() + 2 * hidden_bias.size() + 1; }

  Eigen::VectorXd flatten() const;
  static MlpParams unflatten(const Eigen::VectorXd& theta, int hidden, int inputs);
  static MlpParams zeros(int hidden, int inputs);
  void validate() const;
};

double forward(const MlpParams& params, std::span<const double> x);
Eigen::VectorXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs);

// J(i, k) = d yhat_i / d theta_k. Residuals are r = y - yhat, so the LM step
// solves (J'J + mu I) delta = J'r and the update is theta + delta.
Eigen::MatrixXd jacobian(const MlpParams& params, const SupervisedDataset& data);

struct TrainConfig {
  int restarts = 10;
  int max_epochs = 500;
  int patience = 25;
  double lm_damping_init = 1e-2;
  double lm_damping_factor = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RestartTrace {
  std::vector<double> accepted_sse;  // training SSE after each accepted step, starting with the initial SSE
  double best_valid_sse = 0.0;
  int epochs = 0;
  bool diverged = false;
};

struct TrainResult {
  MlpParams params;
  double valid_sse = 0.0;
  double train_sse = 0.0;
  int best_restart = 0;
  std::vector<RestartTrace> restarts;
};

/// Levenberg-Marquardt with multi-start and validation-based early stopping.
/// Returns the parameter snapshot with the lowest validation SSE over all
/// epochs of all restarts. Restart r draws its initialization from
/// split_seed(seed, r); restarts run in parallel. When `init` is given it
/// replaces restart 0's random initialization.
TrainResult train_lm(const SupervisedDataset& train, const SupervisedDataset& valid, int hidden,
                     const TrainConfig& config, const MlpParams* init = nullptr);

// q = min(30, 5h).
int hidden_units_for_horizon(int horizon);

/// MLP wrapped with its series standardizer as a one-step forecaster.
class MlpForecaster final : public SeriesForecaster {
 public:
  MlpForecaster(MlpParams params, Standardizer standardizer)
      : params_(std::move(params)), standardizer_(std::move(standardizer)) {}
  double forecast(std::span<const double> window) const override;
  int lags() const override { return params_.inputs(); }
  const MlpParams& params() const { return params_; }
  const Standardizer& standardizer() const { return standardizer_; }

 private:
  MlpParams params_;
  Standardizer standardizer_;
};

}  // namespace mimogpr
