#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "mimogpr/timeseries.hpp"

namespace mimogpr {

/// Hyperparameters of the radial-basis-plus-linear-trend covariance
///
///   k(x, x') = nu^2 exp(-|x - x'|^2 / (2 lambda^2)) + gamma x'x + kappa
///
/// and the observation noise standard deviation sigma.
struct KernelHyperparams {
  double nu = 1.0;
  double lambda = 1.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double sigma = 0.1;

  void validate() const;

  // Log-space coordinates (log nu, log lambda, log gamma, log kappa, log sigma).
  // Zero values are floored at kLogFloor before the logarithm.
  Eigen::Matrix<double, 5, 1> to_log() const;
  static KernelHyperparams from_log(const Eigen::Matrix<double, 5, 1>& log_params);

  friend bool operator==(const KernelHyperparams&, const KernelHyperparams&) = default;
};

inline constexpr double kLogFloor = 1e-12;

using LogGradient = Eigen::Matrix<double, 5, 1>;

double kernel_eval(std::span<const double> xi, std::span<const double> xj, const KernelHyperparams& theta);

// Cross-covariance K(A, B), rows of A against rows of B. Parallel over rows of A.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelHyperparams& theta);
// Single-threaded reference; bit-identical to kernel_matrix.
Eigen::MatrixXd kernel_matrix_serial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                     const KernelHyperparams& theta);

/// Diagonal stabilizer escalation: start at `initial`, double on failure, give
/// up past `max`.
struct JitterPolicy {
  double initial = 1e-10;
  double max = 1e-4;
};

/// Lower Cholesky factor of K(X,X) + (sigma^2 + jitter) I together with the
/// jitter that made it succeed.
struct NoisyCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Throws NumericalError("kernel matrix numerically indefinite") when the
// escalation exhausts the policy.
NoisyCholesky factorize(const Eigen::MatrixXd& gram, double noise_variance, JitterPolicy policy = {});

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                               JitterPolicy policy = {});

/// Gradient of the log marginal likelihood in log-parameter space, ordered
/// (nu, lambda, gamma, kappa, sigma).
LogGradient lml_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                         JitterPolicy policy = {});
// Single-threaded reference; bit-identical to lml_gradient.
LogGradient lml_gradient_serial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                                JitterPolicy policy = {});

struct LmlEvaluation {
  double value = 0.0;
  LogGradient gradient = LogGradient::Zero();
  double jitter = 0.0;
};

LmlEvaluation evaluate_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                           JitterPolicy policy = {});

struct FitConfig {
  int restarts = 5;
  int max_iters = 200;
  double grad_tol = 1e-6;
  double jitter = 1e-10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A Gaussian process conditioned on one series' lag-embedded training set.
///
/// Inputs and targets are held in standardized units; the standardizer maps raw
/// lag windows in and posterior means back out. Immutable once built.
class GprModel {
 public:
  // Conditions a GP with fixed hyperparameters on standardized data.
  static GprModel condition(SupervisedDataset standardized, KernelHyperparams theta, Standardizer standardizer,
                            JitterPolicy policy = {});

  const Eigen::MatrixXd& train_inputs() const { return inputs_; }
  const Eigen::VectorXd& train_targets() const { return targets_; }
  const KernelHyperparams& hyperparams() const { return theta_; }
  const Eigen::MatrixXd& chol_factor() const { return chol_.lower; }
  double jitter() const { return chol_.jitter; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Standardizer& standardizer() const { return standardizer_; }
  int lags() const { return static_cast<int>(inputs_.cols()); }
  double log_marginal_likelihood() const { return lml_; }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  KernelHyperparams theta_;
  NoisyCholesky chol_;
  Eigen::VectorXd alpha_;
  Standardizer standardizer_;
  double lml_ = 0.0;
};

/// Maximum-likelihood fit on an already standardized dataset.
///
/// Restart 0 starts at `start` when given, otherwise at data-informed centers;
/// restart r > 0 samples log-parameters within a factor of 10 of the centers
/// from the stream split_seed(seed, r). The best restart wins.
GprModel fit(const SupervisedDataset& standardized, const FitConfig& config,
             std::optional<KernelHyperparams> start = std::nullopt, Standardizer standardizer = {});

// Fits a standardizer on `raw`, then fits the GP on the standardized data.
GprModel fit_series(const SupervisedDataset& raw, const FitConfig& config,
                    std::optional<KernelHyperparams> start = std::nullopt);

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Posterior at standardized test inputs.
Posterior predict(const GprModel& model, const Eigen::MatrixXd& test_inputs);
// Posterior mean only (skips the covariance solve).
Eigen::VectorXd predict_mean(const GprModel& model, const Eigen::MatrixXd& test_inputs);

// One-step forecast from a raw lag window (most recent first), in raw units.
double forecast(const GprModel& model, std::span<const double> raw_window);

}  // namespace mimogpr
