#include "mimogpr/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <omp.h>

#include "mimogpr/error.hpp"
#include "mimogpr/rng.hpp"

namespace mimogpr {

namespace {

// Below this many kernel entries the thread team costs more than it saves.
constexpr Eigen::Index kParallelThreshold = 4096;

// Log-parameters are kept inside [log kLogFloor, log kLogCeiling].
constexpr double kLogCeiling = 1e6;

inline double squared_distance(const double* a, const double* b, Eigen::Index p, Eigen::Index stride_a,
                               Eigen::Index stride_b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double d = a[k * stride_a] - b[k * stride_b];
    s += d * d;
  }
  return s;
}

inline double dot(const double* a, const double* b, Eigen::Index p, Eigen::Index stride_a, Eigen::Index stride_b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) s += a[k * stride_a] * b[k * stride_b];
  return s;
}

// Shared by every kernel entry path so that the parallel and serial routes
// perform the same floating-point operations.
inline double kernel_entry(double sq_dist, double inner, const KernelHyperparams& theta) {
  return theta.nu * theta.nu * std::exp(-sq_dist / (2.0 * theta.lambda * theta.lambda)) + theta.gamma * inner +
         theta.kappa;
}

inline double row_kernel(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j,
                         const KernelHyperparams& theta) {
  const Eigen::Index p = a.cols();
  const double* pa = a.data() + i;
  const double* pb = b.data() + j;
  return kernel_entry(squared_distance(pa, pb, p, a.rows(), b.rows()), dot(pa, pb, p, a.rows(), b.rows()), theta);
}

void check_columns(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw Error("kernel dimension mismatch: " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
}

// Per-row partial sums of the five trace terms 1/2 tr(Q dK/dtheta_k) for rows
// [row, row+1). Summed in row order by the callers.
LogGradient gradient_row(const Eigen::MatrixXd& x, const Eigen::MatrixXd& q, const KernelHyperparams& theta,
                         Eigen::Index i) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double nu2 = theta.nu * theta.nu;
  const double lambda2 = theta.lambda * theta.lambda;
  LogGradient g = LogGradient::Zero();
  const double* xi = x.data() + i;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* xj = x.data() + j;
    const double d2 = squared_distance(xi, xj, p, n, n);
    const double rbf = nu2 * std::exp(-d2 / (2.0 * lambda2));
    const double qij = q(i, j);
    g(0) += qij * 2.0 * rbf;
    g(1) += qij * rbf * d2 / lambda2;
    g(2) += qij * theta.gamma * dot(xi, xj, p, n, n);
    g(3) += qij * theta.kappa;
  }
  g(4) = q(i, i) * 2.0 * theta.sigma * theta.sigma;
  return 0.5 * g;
}

struct Solved {
  NoisyCholesky chol;
  Eigen::VectorXd alpha;
};

Solved solve_system(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                    JitterPolicy policy) {
  theta.validate();
  if (x.rows() != y.size()) {
    throw Error("target length " + std::to_string(y.size()) + " does not match " + std::to_string(x.rows()) +
                " input rows");
  }
  if (x.rows() < 1) throw Error("empty training set");
  Solved s;
  s.chol = factorize(kernel_matrix(x, x, theta), theta.sigma * theta.sigma, policy);
  s.alpha = s.chol.lower.transpose().triangularView<Eigen::Upper>().solve(
      s.chol.lower.triangularView<Eigen::Lower>().solve(y));
  return s;
}

double lml_from(const Solved& s, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  const double log_det_half = s.chol.lower.diagonal().array().log().sum();
  return -0.5 * y.dot(s.alpha) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd gradient_weights(const Solved& s) {
  const Eigen::Index n = s.alpha.size();
  const Eigen::MatrixXd half = s.chol.lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd inverse = half.transpose() * half;
  return s.alpha * s.alpha.transpose() - inverse;
}

LogGradient gradient_parallel(const Eigen::MatrixXd& x, const Eigen::MatrixXd& q, const KernelHyperparams& theta) {
  const Eigen::Index n = x.rows();
  std::vector<LogGradient> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (n * n >= kParallelThreshold)
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = gradient_row(x, q, theta, i);
  LogGradient g = LogGradient::Zero();
  for (const auto& r : rows) g += r;
  return g;
}

LogGradient gradient_serial(const Eigen::MatrixXd& x, const Eigen::MatrixXd& q, const KernelHyperparams& theta) {
  LogGradient g = LogGradient::Zero();
  for (Eigen::Index i = 0; i < x.rows(); ++i) g += gradient_row(x, q, theta, i);
  return g;
}

Eigen::Matrix<double, 5, 1> clamp_log(Eigen::Matrix<double, 5, 1> v) {
  const double lo = std::log(kLogFloor);
  const double hi = std::log(kLogCeiling);
  for (int k = 0; k < 5; ++k) v(k) = std::clamp(v(k), lo, hi);
  return v;
}

double median_pairwise_distance(const Eigen::MatrixXd& x) {
  const Eigen::Index n = std::min<Eigen::Index>(x.rows(), 200);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  }
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

struct Ascent {
  KernelHyperparams theta;
  double value = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Projected gradient ascent in log space with Armijo backtracking (halving).
Ascent ascend(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& start,
              const FitConfig& config, JitterPolicy policy) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-14;
  const double lo = std::log(kLogFloor);
  const double hi = std::log(kLogCeiling);

  Ascent out;
  Eigen::Matrix<double, 5, 1> point = clamp_log(start.to_log());
  LmlEvaluation current;
  try {
    current = evaluate_lml(x, y, KernelHyperparams::from_log(point), policy);
  } catch (const NumericalError&) {
    return out;
  }
  if (!std::isfinite(current.value)) return out;

  double step = 1.0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    LogGradient g = current.gradient;
    for (int k = 0; k < 5; ++k) {
      if ((point(k) <= lo && g(k) < 0.0) || (point(k) >= hi && g(k) > 0.0)) g(k) = 0.0;
    }
    if (!g.allFinite() || g.norm() <= config.grad_tol) break;

    bool accepted = false;
    while (step >= kMinStep) {
      const Eigen::Matrix<double, 5, 1> trial = clamp_log(point + step * g);
      const double predicted = g.dot(trial - point);
      try {
        LmlEvaluation next = evaluate_lml(x, y, KernelHyperparams::from_log(trial), policy);
        if (std::isfinite(next.value) && next.value >= current.value + kArmijo * predicted && predicted > 0.0) {
          point = trial;
          current = next;
          accepted = true;
          break;
        }
      } catch (const NumericalError&) {
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(step * 2.0, 1e3);
  }
  out.theta = KernelHyperparams::from_log(point);
  out.value = current.value;
  out.ok = true;
  return out;
}

}  // namespace

void KernelHyperparams::validate() const {
  const bool finite = std::isfinite(nu) && std::isfinite(lambda) && std::isfinite(gamma) && std::isfinite(kappa) &&
                      std::isfinite(sigma);
  if (!finite || !(nu > 0.0) || !(lambda > 0.0) || sigma < 0.0 || gamma < 0.0 || kappa < 0.0) {
    throw Error("invalid kernel hyperparameters (need nu>0, lambda>0, sigma>=0, gamma>=0, kappa>=0, all finite)");
  }
}

Eigen::Matrix<double, 5, 1> KernelHyperparams::to_log() const {
  Eigen::Matrix<double, 5, 1> v;
  v << std::log(std::max(nu, kLogFloor)), std::log(std::max(lambda, kLogFloor)), std::log(std::max(gamma, kLogFloor)),
      std::log(std::max(kappa, kLogFloor)), std::log(std::max(sigma, kLogFloor));
  return v;
}

KernelHyperparams KernelHyperparams::from_log(const Eigen::Matrix<double, 5, 1>& v) {
  return KernelHyperparams{std::exp(v(0)), std::exp(v(1)), std::exp(v(2)), std::exp(v(3)), std::exp(v(4))};
}

double kernel_eval(std::span<const double> xi, std::span<const double> xj, const KernelHyperparams& theta) {
  if (xi.size() != xj.size()) {
    throw Error("kernel dimension mismatch: " + std::to_string(xi.size()) + " vs " + std::to_string(xj.size()));
  }
  const auto p = static_cast<Eigen::Index>(xi.size());
  return kernel_entry(squared_distance(xi.data(), xj.data(), p, 1, 1), dot(xi.data(), xj.data(), p, 1, 1), theta);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelHyperparams& theta) {
  check_columns(a, b);
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  Eigen::MatrixXd k(na, nb);
#pragma omp parallel for schedule(static) if (na * nb >= kParallelThreshold)
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) k(i, j) = row_kernel(a, i, b, j, theta);
  }
  return k;
}

Eigen::MatrixXd kernel_matrix_serial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                     const KernelHyperparams& theta) {
  check_columns(a, b);
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = row_kernel(a, i, b, j, theta);
  }
  return k;
}

NoisyCholesky factorize(const Eigen::MatrixXd& gram, double noise_variance, JitterPolicy policy) {
  if (gram.rows() != gram.cols()) throw Error("gram matrix must be square");
  if (!gram.allFinite()) throw NumericalError("kernel matrix numerically indefinite (non-finite entries)");
  for (double jitter = policy.initial; jitter <= policy.max; jitter *= 2.0) {
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      return NoisyCholesky{llt.matrixL(), jitter};
    }
  }
  throw NumericalError("kernel matrix numerically indefinite (jitter exceeded " + format_double(policy.max) + ")");
}

LmlEvaluation evaluate_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                           JitterPolicy policy) {
  const Solved s = solve_system(x, y, theta, policy);
  LmlEvaluation e;
  e.value = lml_from(s, y);
  e.gradient = gradient_parallel(x, gradient_weights(s), theta);
  e.jitter = s.chol.jitter;
  return e;
}

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                               JitterPolicy policy) {
  return lml_from(solve_system(x, y, theta, policy), y);
}

LogGradient lml_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                         JitterPolicy policy) {
  const Solved s = solve_system(x, y, theta, policy);
  return gradient_parallel(x, gradient_weights(s), theta);
}

LogGradient lml_gradient_serial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelHyperparams& theta,
                                JitterPolicy policy) {
  const Solved s = solve_system(x, y, theta, policy);
  return gradient_serial(x, gradient_weights(s), theta);
}

void FitConfig::validate() const {
  if (restarts < 1) throw Error("restarts must be >= 1");
  if (max_iters < 0) throw Error("max_iters must be >= 0");
  if (!(jitter > 0.0)) throw Error("jitter must be positive");
  if (!(grad_tol >= 0.0)) throw Error("grad_tol must be nonnegative");
}

GprModel GprModel::condition(SupervisedDataset standardized, KernelHyperparams theta, Standardizer standardizer,
                             JitterPolicy policy) {
  GprModel m;
  const Solved s = solve_system(standardized.inputs, standardized.targets, theta, policy);
  m.lml_ = lml_from(s, standardized.targets);
  m.inputs_ = std::move(standardized.inputs);
  m.targets_ = std::move(standardized.targets);
  m.theta_ = theta;
  m.chol_ = s.chol;
  m.alpha_ = s.alpha;
  m.standardizer_ = standardizer.means().size() == m.inputs_.cols() ? std::move(standardizer)
                                                                     : Standardizer::identity(m.lags());
  return m;
}

GprModel fit(const SupervisedDataset& data, const FitConfig& config, std::optional<KernelHyperparams> start,
             Standardizer standardizer) {
  config.validate();
  if (data.size() < 2) throw Error("GPR fit needs at least 2 training rows");
  const double n = static_cast<double>(data.size());
  const double target_std = std::sqrt((data.targets.array() - data.targets.mean()).square().sum() / (n - 1.0));
  if (!(target_std > 0.0)) throw Error("degenerate dataset: zero target variance");

  const KernelHyperparams centers{target_std, median_pairwise_distance(data.inputs), 0.01, 0.01, 0.1 * target_std};
  const JitterPolicy policy{config.jitter, std::max(config.jitter, 1e-4)};

  Ascent best;
  for (int r = 0; r < config.restarts; ++r) {
    KernelHyperparams init = centers;
    if (r == 0 && start) {
      init = *start;
    } else if (r > 0) {
      Rng rng(split_seed(config.seed, static_cast<std::uint64_t>(r)));
      Eigen::Matrix<double, 5, 1> v = centers.to_log();
      for (int k = 0; k < 5; ++k) v(k) += rng.uniform(std::log(0.1), std::log(10.0));
      init = KernelHyperparams::from_log(v);
    }
    const Ascent a = ascend(data.inputs, data.targets, init, config, policy);
    if (a.ok && (!best.ok || a.value > best.value)) best = a;
  }
  if (!best.ok) throw NumericalError("GPR fit failed: every restart hit an indefinite kernel matrix");
  return GprModel::condition(data, best.theta, std::move(standardizer), policy);
}

GprModel fit_series(const SupervisedDataset& raw, const FitConfig& config, std::optional<KernelHyperparams> start) {
  Standardizer standardizer = fit_standardizer(raw);
  return fit(standardizer.apply(raw), config, start, standardizer);
}

Posterior predict(const GprModel& model, const Eigen::MatrixXd& test_inputs) {
  if (test_inputs.cols() != model.train_inputs().cols()) {
    throw Error("prediction inputs have " + std::to_string(test_inputs.cols()) + " columns, model expects " +
                std::to_string(model.train_inputs().cols()));
  }
  const Eigen::MatrixXd cross = kernel_matrix(test_inputs, model.train_inputs(), model.hyperparams());
  Posterior post;
  post.mean = cross * model.alpha();
  const Eigen::MatrixXd v = model.chol_factor().triangularView<Eigen::Lower>().solve(cross.transpose());
  post.cov = kernel_matrix(test_inputs, test_inputs, model.hyperparams()) - v.transpose() * v;
  for (Eigen::Index i = 0; i < post.cov.rows(); ++i) {
    if (post.cov(i, i) < 0.0 && post.cov(i, i) >= -1e-8) post.cov(i, i) = 0.0;
  }
  return post;
}

Eigen::VectorXd predict_mean(const GprModel& model, const Eigen::MatrixXd& test_inputs) {
  if (test_inputs.cols() != model.train_inputs().cols()) {
    throw Error("prediction inputs have " + std::to_string(test_inputs.cols()) + " columns, model expects " +
                std::to_string(model.train_inputs().cols()));
  }
  return kernel_matrix(test_inputs, model.train_inputs(), model.hyperparams()) * model.alpha();
}

double forecast(const GprModel& model, std::span<const double> raw_window) {
  const Eigen::RowVectorXd z = model.standardizer().apply_input(raw_window).transpose();
  const Eigen::VectorXd mean = predict_mean(model, Eigen::MatrixXd(z));
  return model.standardizer().invert_target(mean(0));
}

}  // namespace mimogpr
