#include "mimogpr/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "mimogpr/error.hpp"
#include "mimogpr/rng.hpp"

namespace mimogpr {

namespace {

// Damping beyond this means no step can reduce the training SSE any more.
constexpr double kMaxDamping = 1e12;

void check_dataset(const MlpParams& params, const SupervisedDataset& data) {
  if (data.size() == 0) throw Error("empty dataset");
  if (data.inputs.cols() != params.inputs()) {
    throw Error("dataset has " + std::to_string(data.inputs.cols()) + " inputs, network expects " +
                std::to_string(params.inputs()));
  }
}

double sse(const MlpParams& params, const SupervisedDataset& data) {
  return (data.targets - forward(params, data.inputs)).squaredNorm();
}

MlpParams random_init(int hidden, int inputs, std::uint64_t seed) {
  Rng rng(seed);
  MlpParams p = MlpParams::zeros(hidden, inputs);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index j = 0; j < p.input_weights.rows(); ++j) {
    for (Eigen::Index i = 0; i < p.input_weights.cols(); ++i) p.input_weights(j, i) = rng.uniform(-0.5, 0.5) * in_scale;
  }
  for (Eigen::Index j = 0; j < hidden; ++j) p.hidden_bias(j) = rng.uniform(-0.5, 0.5) * in_scale;
  for (Eigen::Index j = 0; j < hidden; ++j) p.output_weights(j) = rng.uniform(-0.5, 0.5) * out_scale;
  p.output_bias = rng.uniform(-0.5, 0.5) * out_scale;
  return p;
}

// Solves (J'J + mu I) delta = J'r, through the N x N dual system when the
// network has more parameters than there are samples.
Eigen::VectorXd lm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& residual, double damping) {
  if (jac.rows() >= jac.cols()) {
    Eigen::MatrixXd normal = jac.transpose() * jac;
    normal.diagonal().array() += damping;
    return normal.llt().solve(jac.transpose() * residual);
  }
  Eigen::MatrixXd gram = jac * jac.transpose();
  gram.diagonal().array() += damping;
  return jac.transpose() * gram.llt().solve(residual);
}

struct RestartOutcome {
  RestartTrace trace;
  MlpParams best;
};

RestartOutcome run_restart(const SupervisedDataset& train, const SupervisedDataset& valid, MlpParams params,
                           const TrainConfig& config) {
  RestartOutcome out;
  double damping = config.lm_damping_init;
  double train_sse = sse(params, train);
  double valid_sse = sse(params, valid);
  if (!std::isfinite(train_sse) || !std::isfinite(valid_sse)) {
    out.trace.diverged = true;
    out.trace.best_valid_sse = std::numeric_limits<double>::infinity();
    out.best = params;
    return out;
  }
  out.trace.accepted_sse.push_back(train_sse);
  out.best = params;
  out.trace.best_valid_sse = valid_sse;
  int stall = 0;

  Eigen::VectorXd theta = params.flatten();
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const Eigen::MatrixXd jac = jacobian(params, train);
    const Eigen::VectorXd residual = train.targets - forward(params, train.inputs);
    bool accepted = false;
    while (damping <= kMaxDamping) {
      const Eigen::VectorXd delta = lm_step(jac, residual, damping);
      const Eigen::VectorXd trial_theta = theta + delta;
      MlpParams trial = MlpParams::unflatten(trial_theta, params.hidden(), params.inputs());
      const double trial_sse = delta.allFinite() ? sse(trial, train) : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_sse) && trial_sse < train_sse) {
        theta = trial_theta;
        params = std::move(trial);
        train_sse = trial_sse;
        damping = std::max(damping / config.lm_damping_factor, 1e-15);
        accepted = true;
        break;
      }
      damping *= config.lm_damping_factor;
    }
    if (!accepted) break;
    out.trace.accepted_sse.push_back(train_sse);
    out.trace.epochs = epoch + 1;

    valid_sse = sse(params, valid);
    if (valid_sse < out.trace.best_valid_sse) {
      out.trace.best_valid_sse = valid_sse;
      out.best = params;
      stall = 0;
    } else if (++stall >= config.patience) {
      break;
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd MlpParams::flatten() const {
  const Eigen::Index q = hidden_bias.size();
  const Eigen::Index p = input_weights.cols();
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) theta(k++) = input_weights(j, i);
  }
  theta.segment(k, q) = hidden_bias;
  k += q;
  theta.segment(k, q) = output_weights;
  k += q;
  theta(k) = output_bias;
  return theta;
}

MlpParams MlpParams::unflatten(const Eigen::VectorXd& theta, int hidden, int inputs) {
  MlpParams out = zeros(hidden, inputs);
  if (theta.size() != out.parameter_count()) throw Error("parameter vector size mismatch");
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < hidden; ++j) {
    for (Eigen::Index i = 0; i < inputs; ++i) out.input_weights(j, i) = theta(k++);
  }
  out.hidden_bias = theta.segment(k, hidden);
  k += hidden;
  out.output_weights = theta.segment(k, hidden);
  k += hidden;
  out.output_bias = theta(k);
  return out;
}

MlpParams MlpParams::zeros(int hidden, int inputs) {
  if (hidden < 1 || inputs < 1) throw Error("network needs at least one hidden unit and one input");
  MlpParams p;
  p.input_weights = Eigen::MatrixXd::Zero(hidden, inputs);
  p.hidden_bias = Eigen::VectorXd::Zero(hidden);
  p.output_weights = Eigen::VectorXd::Zero(hidden);
  p.output_bias = 0.0;
  return p;
}

void MlpParams::validate() const {
  if (input_weights.rows() < 1 || input_weights.cols() < 1) throw Error("network needs q >= 1 and p >= 1");
  if (hidden_bias.size() != input_weights.rows() || output_weights.size() != input_weights.rows()) {
    throw Error("inconsistent network dimensions");
  }
  if (!input_weights.allFinite() || !hidden_bias.allFinite() || !output_weights.allFinite() ||
      !std::isfinite(output_bias)) {
    throw Error("non-finite network weights");
  }
}

double forward(const MlpParams& params, std::span<const double> x) {
  if (static_cast<int>(x.size()) != params.inputs()) {
    throw Error("input has " + std::to_string(x.size()) + " values, network expects " +
                std::to_string(params.inputs()));
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd activation = (params.input_weights * xv + params.hidden_bias).array().tanh();
  return params.output_bias + params.output_weights.dot(activation);
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != params.inputs()) throw Error("input dimension mismatch");
  const Eigen::MatrixXd activation =
      ((inputs * params.input_weights.transpose()).rowwise() + params.hidden_bias.transpose()).array().tanh();
  return (activation * params.output_weights).array() + params.output_bias;
}

Eigen::MatrixXd jacobian(const MlpParams& params, const SupervisedDataset& data) {
  check_dataset(params, data);
  const Eigen::Index n = data.inputs.rows();
  const Eigen::Index p = params.inputs();
  const Eigen::Index q = params.hidden();
  const Eigen::MatrixXd activation =
      ((data.inputs * params.input_weights.transpose()).rowwise() + params.hidden_bias.transpose()).array().tanh();
  Eigen::MatrixXd jac(n, params.parameter_count());
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < q; ++j) {
      // d yhat / d pre-activation of unit j
      const double a = activation(r, j);
      const double local = params.output_weights(j) * (1.0 - a * a);
      for (Eigen::Index i = 0; i < p; ++i) jac(r, k++) = local * data.inputs(r, i);
    }
    for (Eigen::Index j = 0; j < q; ++j) {
      const double a = activation(r, j);
      jac(r, k++) = params.output_weights(j) * (1.0 - a * a);
    }
    for (Eigen::Index j = 0; j < q; ++j) jac(r, k++) = activation(r, j);
    jac(r, k) = 1.0;
  }
  return jac;
}

void TrainConfig::validate() const {
  if (restarts < 1) throw Error("restarts must be >= 1");
  if (max_epochs < 0) throw Error("max_epochs must be >= 0");
  if (patience < 1) throw Error("patience must be >= 1");
  if (!(lm_damping_init > 0.0) || !(lm_damping_factor > 1.0)) {
    throw Error("LM damping must be positive and the factor greater than 1");
  }
}

TrainResult train_lm(const SupervisedDataset& train, const SupervisedDataset& valid, int hidden,
                     const TrainConfig& config, const MlpParams* init) {
  config.validate();
  if (hidden < 1) throw Error("hidden unit count must be >= 1");
  if (train.size() == 0 || valid.size() == 0) throw Error("training and validation sets must be nonempty");
  if (train.inputs.cols() != valid.inputs.cols()) throw Error("training and validation lag orders differ");
  const int inputs = static_cast<int>(train.inputs.cols());
  if (init && (init->hidden() != hidden || init->inputs() != inputs)) throw Error("initial network has wrong shape");

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < config.restarts; ++r) {
    MlpParams start = (r == 0 && init) ? *init
                                       : random_init(hidden, inputs, split_seed(config.seed, static_cast<std::uint64_t>(r)));
    outcomes[static_cast<std::size_t>(r)] = run_restart(train, valid, std::move(start), config);
  }

  TrainResult result;
  bool found = false;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const auto& o = outcomes[r];
    result.restarts.push_back(o.trace);
    if (o.trace.diverged || !std::isfinite(o.trace.best_valid_sse)) continue;
    if (!found || o.trace.best_valid_sse < result.valid_sse) {
      result.params = o.best;
      result.valid_sse = o.trace.best_valid_sse;
      result.best_restart = static_cast<int>(r);
      found = true;
    }
  }
  if (!found) {
    throw Error("LM training diverged in all " + std::to_string(config.restarts) + " restarts (non-finite loss)");
  }
  result.train_sse = sse(result.params, train);
  return result;
}

int hidden_units_for_horizon(int horizon) {
  if (horizon < 1) throw Error("forecast horizon must be >= 1");
  return std::min(30, 5 * horizon);
}

double MlpForecaster::forecast(std::span<const double> window) const {
  const Eigen::VectorXd z = standardizer_.apply_input(window);
  return standardizer_.invert_target(mimogpr::forward(params_, std::span<const double>(z.data(), z.size())));
}

}  // namespace mimogpr
