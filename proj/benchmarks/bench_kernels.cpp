#include <cmath>
#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "cpodem/common_grid.hpp"
#include "cpodem/diagnostics.hpp"
#include "cpodem/kdtree.hpp"
#include "cpodem/kriging.hpp"
#include "cpodem/maxpro.hpp"
#include "cpodem/random.hpp"
#include "cpodem/sobol.hpp"

namespace cpodem {
namespace {

Eigen::MatrixXd unit_designs(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  auto rng = make_rng(seed);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = uniform01(rng);
  return X;
}

Eigen::VectorXd smooth_response(const Eigen::MatrixXd& X) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = std::sin(3 * X(i, 0)) + X.row(i).squaredNorm();
  return y;
}

void BM_ProfileLikelihood(benchmark::State& state) {
  const auto n = state.range(0);
  const auto X = unit_designs(n, 5, 1);
  const auto y = smooth_response(X);
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(5, 2.0);
  Eigen::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(profile_log_likelihood(X, y, eta, 1e-8, &grad));
  state.SetComplexityN(n);
}
BENCHMARK(BM_ProfileLikelihood)->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oNCubed);

void BM_FitMle(benchmark::State& state) {
  const auto X = unit_designs(30, 5, 2);
  const auto y = smooth_response(X);
  GPFitOptions opts;
  opts.n_starts = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_mle(X, y, opts).log_likelihood());
}
BENCHMARK(BM_FitMle)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GpPredict(benchmark::State& state) {
  const auto X = unit_designs(30, 5, 3);
  const auto m = GPModel::with_eta(X, smooth_response(X), Eigen::VectorXd::Constant(5, 2.0), 1e-8);
  const std::vector<double> c{0.3, 0.6, 0.1, 0.9, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(c));
}
BENCHMARK(BM_GpPredict);

void BM_KdTreeNearest(benchmark::State& state) {
  auto rng = make_rng(4);
  std::vector<KdTree2::Point> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {uniform01(rng), uniform01(rng)};
  const KdTree2 tree(pts);
  for (auto _ : state) benchmark::DoNotOptimize(tree.nearest({uniform01(rng), uniform01(rng)}, 10));
}
BENCHMARK(BM_KdTreeNearest)->Arg(3072)->Arg(12288);

void BM_IdwOperator(benchmark::State& state) {
  auto rng = make_rng(5);
  std::vector<KdTree2::Point> src(3072), dst(3072);
  for (auto& p : src) p = {uniform01(rng), uniform01(rng)};
  for (auto& p : dst) p = {uniform01(rng), uniform01(rng)};
  const IdwInterpolator idw(src, 1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(idw.operator_for(dst).nonZeros());
}
BENCHMARK(BM_IdwOperator)->Unit(benchmark::kMillisecond);

void BM_MaxProCriterion(benchmark::State& state) {
  const auto d = random_latin_hypercube(30, 5, 6);
  for (auto _ : state) benchmark::DoNotOptimize(maxpro_criterion(d));
}
BENCHMARK(BM_MaxProCriterion);

void BM_GenerateDesign(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(generate_design(30, 5, 7, AnnealingOptions{1, 50}).sum());
}
BENCHMARK(BM_GenerateDesign)->Unit(benchmark::kMillisecond);

void BM_Psd(benchmark::State& state) {
  auto rng = make_rng(8);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (auto& v : x) v = uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(psd(x, 30e-6, Window::Hann, true).df);
}
BENCHMARK(BM_Psd)->Arg(64)->Arg(1024);

void BM_SobolMainEffects(benchmark::State& state) {
  const auto f = [](std::span<const double> x) { return std::sin(x[0]) + 7 * x[1] * x[1] + x[0] * x[2]; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(main_effect_indices(f, 3, static_cast<std::size_t>(state.range(0)), 1).D);
  }
}
BENCHMARK(BM_SobolMainEffects)->Arg(1 << 10)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cpodem
