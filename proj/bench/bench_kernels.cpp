// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "mimogpr/gpr.hpp"
#include "mimogpr/harness.hpp"
#include "mimogpr/mimo.hpp"
#include "mimogpr/rng.hpp"

using namespace mimogpr;

namespace {

Eigen::MatrixXd random_inputs(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  }
  return x;
}

const KernelHyperparams kTheta{1.2, 1.5, 0.1, 0.05, 0.3};

void BM_KernelMatrix(benchmark::State& state) {
  const auto x = random_inputs(state.range(0), 12, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_matrix(x, x, kTheta));
}

void BM_KernelMatrixSerial(benchmark::State& state) {
  const auto x = random_inputs(state.range(0), 12, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_matrix_serial(x, x, kTheta));
}

void BM_LmlGradient(benchmark::State& state) {
  const auto x = random_inputs(state.range(0), 12, 2);
  const Eigen::VectorXd y = random_inputs(state.range(0), 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(lml_gradient(x, y, kTheta));
}

void BM_LmlGradientSerial(benchmark::State& state) {
  const auto x = random_inputs(state.range(0), 12, 2);
  const Eigen::VectorXd y = random_inputs(state.range(0), 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(lml_gradient_serial(x, y, kTheta));
}

struct StageFixture {
  TimeSeriesPanel panel;
  SeriesModels models;
  RowRange rows;

  StageFixture() : panel(generate_synthetic_panel(SyntheticSpec{})) {
    const auto split = mimogpr::split(panel.rows(), {96, 60}, 12);
    std::vector<GprModel> gprs;
    for (std::size_t s = 0; s < panel.series_count(); ++s) {
      const auto raw = embed_range(panel.series(s), 12, {12, split.train.end});
      const Standardizer st = fit_standardizer(raw);
      gprs.push_back(GprModel::condition(st.apply(raw), kTheta, st));
    }
    models = wrap_gpr(std::move(gprs));
    rows = split.valid;
  }
};

const StageFixture& stage_fixture() {
  static const StageFixture f;
  return f;
}

void BM_FirstStage(benchmark::State& state) {
  const auto& f = stage_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(build_first_stage(f.models, f.panel, f.rows, 12));
}

void BM_FirstStageSerial(benchmark::State& state) {
  const auto& f = stage_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(build_first_stage_serial(f.models, f.panel, f.rows, 12));
}

}  // namespace

BENCHMARK(BM_KernelMatrix)->Arg(96)->Arg(256)->Arg(1024);
BENCHMARK(BM_KernelMatrixSerial)->Arg(96)->Arg(256)->Arg(1024);
BENCHMARK(BM_LmlGradient)->Arg(96)->Arg(256);
BENCHMARK(BM_LmlGradientSerial)->Arg(96)->Arg(256);
BENCHMARK(BM_FirstStage);
BENCHMARK(BM_FirstStageSerial);

BENCHMARK_MAIN();
