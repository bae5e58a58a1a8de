#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cpodem/error.hpp"
#include "cpodem/maxpro.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

DesignMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  DesignMatrix d(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index k = 0;
    for (double v : row) d(i, k++) = v;
    ++i;
  }
  return d;
}

// Direct transcription of the criterion, used as the oracle for random designs.
double brute_criterion(const DesignMatrix& d) {
  const auto n = d.rows(), p = d.cols();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double prod = 1.0;
      for (Eigen::Index k = 0; k < p; ++k) prod /= (d(i, k) - d(j, k)) * (d(i, k) - d(j, k));
      sum += prod;
    }
  }
  return std::pow(sum / (0.5 * static_cast<double>(n * (n - 1))), 1.0 / static_cast<double>(p));
}

void expect_latin_hypercube(const DesignMatrix& d) {
  const auto n = d.rows();
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    std::vector<double> col(d.col(k).data(), d.col(k).data() + n);
    std::sort(col.begin(), col.end());
    for (Eigen::Index j = 0; j < n; ++j) {
      EXPECT_DOUBLE_EQ(col[static_cast<std::size_t>(j)], (static_cast<double>(j) + 0.5) / static_cast<double>(n));
    }
  }
}

TEST(MaxProCriterion, HandValues) {
  EXPECT_EQ(maxpro_criterion(rows({{0, 0}, {1, 1}})), 1.0);
  EXPECT_EQ(maxpro_criterion(rows({{0, 0}, {0.5, 0.5}})), 4.0);
  EXPECT_EQ(maxpro_criterion(rows({{0}, {0.5}})), 4.0);
}

TEST(MaxProCriterion, SharedCoordinateIsDegenerate) {
  try {
    maxpro_criterion(rows({{0.3, 0.1}, {0.3, 0.9}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateDesign);
  }
}

TEST(MaxProCriterion, MatchesDirectFormula) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = random_latin_hypercube(12, 3, seed);
    EXPECT_NEAR(maxpro_criterion(d), brute_criterion(d), 1e-12 * brute_criterion(d));
  }
}

TEST(GenerateDesign, ThirtyByFiveIsLatinHypercube) {
  const auto d = generate_design(30, 5, 1);
  ASSERT_EQ(d.rows(), 30);
  ASSERT_EQ(d.cols(), 5);
  expect_latin_hypercube(d);
  EXPECT_TRUE(std::isfinite(maxpro_criterion(d)));
}

TEST(GenerateDesign, TwoByOneIsForced) {
  const auto d = generate_design(2, 1, 3);
  std::set<double> values{d(0, 0), d(1, 0)};
  EXPECT_EQ(values, (std::set<double>{0.25, 0.75}));
}

TEST(GenerateDesign, Deterministic) {
  EXPECT_EQ(generate_design(30, 5, 7), generate_design(30, 5, 7));
  EXPECT_NE(generate_design(30, 5, 7), generate_design(30, 5, 8));
}

TEST(GenerateDesign, OptimizerIsMonotone) {
  MaxProTrace trace;
  AnnealingOptions opts;
  opts.n_restarts = 3;
  opts.n_iters = 50;
  const auto d = generate_design(30, 5, 2, opts, &trace);
  ASSERT_EQ(trace.best_history.size(), opts.n_restarts * opts.n_iters);
  ASSERT_EQ(trace.initial_criteria.size(), opts.n_restarts);
  for (std::size_t r = 0; r < opts.n_restarts; ++r) {
    const auto first = trace.best_history.begin() + static_cast<std::ptrdiff_t>(r * opts.n_iters);
    EXPECT_LE(*first, trace.initial_criteria[r]);
    for (auto it = first + 1; it != first + static_cast<std::ptrdiff_t>(opts.n_iters); ++it) EXPECT_LE(*it, *(it - 1));
    EXPECT_LE(trace.final_criterion, trace.initial_criteria[r]);
  }
  EXPECT_NEAR(trace.final_criterion, maxpro_criterion(d), 1e-9 * trace.final_criterion);
}

TEST(GenerateDesign, BeatsRandomLatinHypercubes) {
  const double optimized = maxpro_criterion(generate_design(30, 5, 1));
  std::vector<double> random;
  for (std::uint64_t s = 0; s < 100; ++s) random.push_back(maxpro_criterion(random_latin_hypercube(30, 5, 1000 + s)));
  std::vector<double> sorted = random;
  std::nth_element(sorted.begin(), sorted.begin() + 50, sorted.end());
  EXPECT_LT(optimized, sorted[50]);
  EXPECT_LE(optimized, std::accumulate(random.begin(), random.end(), 0.0) / 100.0);
}

TEST(GenerateDesign, RejectsTooFewPoints) {
  EXPECT_THROW(generate_design(1, 3, 0), Error);
  EXPECT_THROW(generate_design(5, 0, 0), Error);
}

TEST(Projections, CountsAndCoordinates) {
  EXPECT_EQ(projection_scatter(generate_design(6, 2, 0)).size(), 1u);
  const auto d = generate_design(10, 5, 0);
  const auto proj = projection_scatter(d);
  ASSERT_EQ(proj.size(), 10u);
  for (const auto& p : proj) {
    EXPECT_LT(p.k, p.l);
    ASSERT_EQ(p.points.size(), 10u);
    for (Eigen::Index i = 0; i < 10; ++i) {
      EXPECT_EQ(p.points[static_cast<std::size_t>(i)][0], d(i, static_cast<Eigen::Index>(p.k)));
      EXPECT_EQ(p.points[static_cast<std::size_t>(i)][1], d(i, static_cast<Eigen::Index>(p.l)));
    }
  }
}

}  // namespace
}  // namespace cpodem
