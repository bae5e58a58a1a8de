#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "cpodem/cpod.hpp"
#include "cpodem/emulator.hpp"
#include "cpodem/flow_oracle.hpp"
#include "cpodem/maxpro.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

std::vector<TrainingCase> corpus(std::size_t n, const GridSpec& grid, std::size_t steps) {
  const auto& space = injector_design_space();
  const auto D = generate_design(n, injector::kDim, 3, AnnealingOptions{1, 40});
  OracleOptions oo;
  oo.grid = grid;
  oo.steps = steps;
  std::vector<TrainingCase> cases;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    std::vector<double> u;
    for (Eigen::Index k = 0; k < D.cols(); ++k) u.push_back(D(i, k));
    const auto d = denormalize(NormalizedDesign(u), space);
    oo.seed = static_cast<std::uint64_t>(i);
    cases.push_back({"case_" + std::to_string(i), d, oracle_fields(d, space, oo)});
  }
  return cases;
}

// Snapshot matrix of nT columns on a fixed node count, low rank plus noise.
Ensemble synthetic_ensemble(Eigen::Index nodes, Eigen::Index columns) {
  auto rng = make_rng(9);
  std::vector<Eigen::MatrixXd> cases;
  for (Eigen::Index c = 0; c < columns / 16; ++c) {
    Eigen::MatrixXd f(nodes, 16);
    const double a = uniform01(rng), b = uniform01(rng);
    for (Eigen::Index t = 0; t < 16; ++t) {
      for (Eigen::Index j = 0; j < nodes; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(nodes);
        f(j, t) = a * std::sin(6.0 * x + 0.3 * t) + b * std::cos(17.0 * x) + 1e-3 * uniform01(rng);
      }
    }
    cases.push_back(std::move(f));
  }
  return assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
}

void BM_ComputeBasis(benchmark::State& state) {
  const auto e = synthetic_ensemble(3072, state.range(0));
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(3072);
  BasisOptions opts;
  opts.solver = state.range(1) ? EigenSolverKind::Iterative : EigenSolverKind::Dense;
  for (auto _ : state) benchmark::DoNotOptimize(compute_basis(e, w, opts).basis.size());
  state.SetLabel(state.range(1) ? "lanczos" : "dense");
}
BENCHMARK(BM_ComputeBasis)->Args({256, 0})->Args({256, 1})->Args({1024, 0})->Args({1024, 1})
    ->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const auto cases = corpus(12, GridSpec{32, 24}, 8);
  EmulatorConfig config;
  config.variables = {"temperature", "density"};
  config.gp_starts = 2;
  for (auto _ : state) benchmark::DoNotOptimize(train(cases, injector_design_space(), config).partitions.size());
}
BENCHMARK(BM_Train)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_PredictField(benchmark::State& state) {
  static const EmulatorModel model = [] {
    EmulatorConfig config;
    config.variables = {"temperature", "density", "pressure", "axial_velocity"};
    config.gp_starts = 2;
    return train(corpus(20, GridSpec{64, 48}, 16), injector_design_space(), config);
  }();
  auto rng = make_rng(10);
  const auto& space = injector_design_space();
  for (auto _ : state) {
    std::vector<double> u(injector::kDim);
    for (auto& x : u) x = uniform01(rng);
    benchmark::DoNotOptimize(predict_field(model, denormalize(NormalizedDesign(u), space)).partition);
  }
}
BENCHMARK(BM_PredictField)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cpodem

BENCHMARK_MAIN();
