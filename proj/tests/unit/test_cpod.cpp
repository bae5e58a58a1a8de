#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cpodem/common_grid.hpp"
#include "cpodem/cpod.hpp"
#include "cpodem/error.hpp"
#include "cpodem/random.hpp"
#include "test_support.hpp"

namespace cpodem {
namespace {

// n cases of T snapshots on `nodes` points: a few travelling modes whose
// amplitudes vary by case, plus a little noise so the spectrum has a tail.
std::vector<Eigen::MatrixXd> synthetic_cases(std::size_t n, std::size_t T, Eigen::Index nodes, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::vector<Eigen::MatrixXd> cases;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 1.0 + uniform01(rng), b = uniform01(rng), c = 0.3 * uniform01(rng);
    Eigen::MatrixXd f(nodes, static_cast<Eigen::Index>(T));
    for (Eigen::Index t = 0; t < f.cols(); ++t) {
      for (Eigen::Index j = 0; j < nodes; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(nodes);
        f(j, t) = 5.0 + a * std::sin(2 * M_PI * x) + b * std::cos(6 * M_PI * x - 0.4 * t) +
                  c * std::sin(10 * M_PI * x + 0.9 * t) + 1e-3 * (uniform01(rng) - 0.5);
      }
    }
    cases.push_back(std::move(f));
  }
  return cases;
}

Eigen::VectorXd random_weights(Eigen::Index nodes, std::uint64_t seed) {
  auto rng = make_rng(seed, 1);
  Eigen::VectorXd w(nodes);
  for (Eigen::Index i = 0; i < nodes; ++i) w(i) = 0.5 + uniform01(rng);
  return w;
}

TEST(Ensemble, PooledMeanIsRemoved) {
  const auto cases = synthetic_cases(4, 6, 30, 1);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  EXPECT_EQ(e.centered.cols(), 24);
  EXPECT_EQ(e.cases, 4u);
  EXPECT_EQ(e.steps, 6u);
  EXPECT_LT(e.centered.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
  // Column order is case-major.
  EXPECT_TRUE((e.centered.col(6) + e.mean).isApprox(cases[1].col(0), 1e-14));
  const auto raw = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases), false);
  EXPECT_EQ(raw.mean, Eigen::VectorXd::Zero(30));
  EXPECT_EQ(raw.centered.col(7), cases[1].col(1));
}

TEST(Ensemble, ShapeMismatch) {
  std::vector<Eigen::MatrixXd> cases{Eigen::MatrixXd::Ones(5, 3), Eigen::MatrixXd::Ones(5, 4)};
  try {
    assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

class SpectralIdentities : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SpectralIdentities, Hold) {
  const std::uint64_t seed = GetParam();
  const Eigen::Index nodes = 120;
  const auto cases = synthetic_cases(6, 10, nodes, seed);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  const auto w = random_weights(nodes, seed);
  for (double target : {0.9, 0.99, 0.9999}) {
    BasisOptions opts;
    opts.energy_target = target;
    const auto fit = compute_basis(e, w, opts);
    const auto& b = fit.basis;
    const auto K = static_cast<Eigen::Index>(b.size());
    ASSERT_GT(K, 0);

    const Eigen::MatrixXd gram = b.modes.transpose() * w.asDiagonal() * b.modes;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff(), 1e-8);

    for (Eigen::Index k = 1; k < K; ++k) EXPECT_LE(b.eigenvalues(k), b.eigenvalues(k - 1));
    EXPECT_GE(b.captured_energy(), target * (1 - 1e-12));
    if (K > 1) EXPECT_LT(b.energy_fraction(K - 2), target);

    const double err = reconstruction_error(e, b);
    const double expected = std::sqrt(1.0 - b.captured_energy());
    EXPECT_NEAR(err, expected, 1e-6 * expected) << "target " << target;

    // Sum of squared coefficients per mode equals lambda n T.
    const double nT = static_cast<double>(e.centered.cols());
    for (std::size_t k = 0; k < b.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < e.cases; ++i) {
        for (std::size_t t = 0; t < e.steps; ++t) s += fit.coefficients(k, i, t) * fit.coefficients(k, i, t);
      }
      EXPECT_NEAR(s, b.eigenvalues(static_cast<Eigen::Index>(k)) * nT, 1e-9 * s);
    }

    // Largest-magnitude entry of each mode is positive.
    for (Eigen::Index k = 0; k < K; ++k) {
      Eigen::Index arg = 0;
      b.modes.col(k).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(b.modes(arg, k), 0.0);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SpectralIdentities, ::testing::Values(1, 2, 3, 4));

TEST(ComputeBasis, DenseAndIterativeAgree) {
  const auto cases = synthetic_cases(8, 16, 200, 7);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  const auto w = random_weights(200, 7);
  BasisOptions dense, iter;
  dense.solver = EigenSolverKind::Dense;
  iter.solver = EigenSolverKind::Iterative;
  dense.energy_target = iter.energy_target = 0.9999;
  const auto a = compute_basis(e, w, dense);
  const auto b = compute_basis(e, w, iter);
  EXPECT_FALSE(a.used_iterative);
  EXPECT_TRUE(b.used_iterative);
  ASSERT_EQ(a.basis.size(), b.basis.size());
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(a.basis.size()); ++k) {
    EXPECT_NEAR(a.basis.eigenvalues(k), b.basis.eigenvalues(k), 1e-8 * a.basis.eigenvalues(0)) << k;
  }
  // Leading modes match (they are well separated in this ensemble).
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_LE((a.basis.modes.col(k) - b.basis.modes.col(k)).cwiseAbs().maxCoeff(), 1e-6) << k;
  }
}

TEST(ComputeBasis, AutoSwitchesAtTheDenseLimit) {
  const auto cases = synthetic_cases(3, 10, 40, 2);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  BasisOptions opts;
  opts.dense_limit = 29;
  EXPECT_TRUE(compute_basis(e, Eigen::VectorXd::Ones(40), opts).used_iterative);
  opts.dense_limit = 30;
  EXPECT_FALSE(compute_basis(e, Eigen::VectorXd::Ones(40), opts).used_iterative);
}

TEST(ComputeBasis, MaxModesCaps) {
  const auto cases = synthetic_cases(4, 8, 60, 3);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  BasisOptions opts;
  opts.energy_target = 1.0;
  opts.max_modes = 2;
  EXPECT_EQ(compute_basis(e, Eigen::VectorXd::Ones(60), opts).basis.size(), 2u);
}

TEST(ComputeBasis, ConstantEnsembleHasNoModes) {
  std::vector<Eigen::MatrixXd> cases(3, Eigen::MatrixXd::Constant(10, 4, 2.5));
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  const auto fit = compute_basis(e, Eigen::VectorXd::Ones(10));
  EXPECT_EQ(fit.basis.size(), 0u);
  const Eigen::MatrixXd beta(0, 4);
  EXPECT_TRUE(reconstruct(beta, fit.basis).isApprox(cases[0]));
}

TEST(ComputeBasis, BadInputs) {
  const auto cases = synthetic_cases(2, 3, 10, 1);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  EXPECT_THROW(compute_basis(e, Eigen::VectorXd::Ones(9)), Error);
  EXPECT_THROW(compute_basis(e, -Eigen::VectorXd::Ones(10)), Error);
  BasisOptions opts;
  opts.energy_target = 1.5;
  EXPECT_THROW(compute_basis(e, Eigen::VectorXd::Ones(10), opts), Error);
}

TEST(ProjectReconstruct, FullBasisIsLossless) {
  const auto cases = synthetic_cases(3, 5, 50, 11);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  BasisOptions opts;
  opts.energy_target = 1.0;
  const auto fit = compute_basis(e, random_weights(50, 11), opts);
  const Eigen::MatrixXd beta = project(cases[2], fit.basis);
  EXPECT_EQ(beta.rows(), static_cast<Eigen::Index>(fit.basis.size()));
  EXPECT_LE((reconstruct(beta, fit.basis) - cases[2]).cwiseAbs().maxCoeff(), 1e-8);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_NEAR(beta(0, static_cast<Eigen::Index>(t)), fit.coefficients(0, 2, t), 1e-10);
  }
  // Truncated reconstruction uses the leading rows only.
  const Eigen::MatrixXd lead = beta.topRows(1);
  EXPECT_TRUE(reconstruct(lead, fit.basis).isApprox(fit.basis.modes.col(0) * lead + fit.basis.mean.replicate(1, 5)));
  EXPECT_THROW(project(Eigen::MatrixXd::Zero(49, 2), fit.basis), Error);
}

TEST(SnapshotGram, MatchesDefinition) {
  const auto cases = synthetic_cases(2, 4, 25, 5);
  const auto e = assemble_ensemble(std::span<const Eigen::MatrixXd>(cases));
  const auto w = random_weights(25, 5);
  const Eigen::MatrixXd G = snapshot_gram(e.centered, w);
  const Eigen::MatrixXd ref = e.centered.transpose() * w.asDiagonal() * e.centered / 8.0;
  EXPECT_LE((G - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  EXPECT_EQ(G, G.transpose());
}

TEST(OracleEnsemble, FewModesCarryMostEnergy) {
  const auto cases = testing::oracle_cases(8, GridSpec{32, 24}, 16, 3);
  std::vector<AxisymGrid> grids;
  std::vector<DesignPoint> designs;
  for (const auto& c : cases) {
    grids.push_back(c.series.grid);
    designs.push_back(c.design);
  }
  const auto common = select_common_grid(grids, designs);
  std::vector<SnapshotSeries> on_common;
  for (const auto& c : cases) {
    on_common.push_back(rescale_case_to_common(c.series, build_region_map(common, c.design), common));
  }
  const auto e = assemble_ensemble(on_common, "temperature");
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(common.grid.cell_area.data(),
                                                               static_cast<Eigen::Index>(common.grid.nodes()));
  const auto fit = compute_basis(e, w);
  EXPECT_LT(fit.basis.size(), e.centered.cols() / 2);
  EXPECT_GE(fit.basis.captured_energy(), 0.99);
}

}  // namespace
}  // namespace cpodem
