#include "cpodem/sobol.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "cpodem/error.hpp"
#include "cpodem/parallel.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

struct DirectionEntry {
  unsigned s;
  unsigned a;
  std::array<unsigned, 7> m;
};

// Joe-Kuo new-joe-kuo-6.21201 entries for dimensions 2..21.
constexpr std::array<DirectionEntry, kSobolMaxDim - 1> kDirections{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
}};

constexpr unsigned kBits = 32;

std::array<std::uint32_t, kBits> direction_numbers(std::size_t dim) {
  std::array<std::uint32_t, kBits> v{};
  if (dim == 0) {
    for (unsigned k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
    return v;
  }
  const auto& e = kDirections[dim - 1];
  for (unsigned k = 0; k < kBits; ++k) {
    if (k < e.s) {
      v[k] = e.m[k] << (kBits - 1 - k);
    } else {
      std::uint32_t x = v[k - e.s] ^ (v[k - e.s] >> e.s);
      for (unsigned i = 1; i < e.s; ++i) {
        if ((e.a >> (e.s - 1 - i)) & 1u) x ^= v[k - i];
      }
      v[k] = x;
    }
  }
  return v;
}

Eigen::MatrixXd sobol_impl(std::size_t N, std::size_t p, const std::vector<std::uint32_t>& shift) {
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "Sobol' point count must be positive");
  if (p < 1 || p > kSobolMaxDim) {
    throw Error(ErrorKind::DimensionUnsupported,
                "Sobol' dimension " + std::to_string(p) + " exceeds the table (max " +
                    std::to_string(kSobolMaxDim) + ")");
  }
  if (N >= (std::size_t{1} << kBits)) throw Error(ErrorKind::InvalidArgument, "too many Sobol' points");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(p));
  for (std::size_t d = 0; d < p; ++d) {
    const auto v = direction_numbers(d);
    std::uint32_t x = 0;
    // Gray-code order: point n differs from n-1 by the direction number at
    // the lowest zero bit of n-1.
    for (std::size_t n = 1; n <= N; ++n) {
      unsigned c = 0;
      std::size_t m = n - 1;
      while (m & 1u) {
        m >>= 1;
        ++c;
      }
      x ^= v[c];
      out(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(d)) =
          static_cast<double>(x ^ shift[d]) * 0x1.0p-32;
    }
  }
  return out;
}

struct Estimates {
  double mean = 0.0;
  double halfwidth = 0.0;
};

Estimates mean_ci(const Eigen::VectorXd& terms) {
  const double n = static_cast<double>(terms.size());
  const double mean = terms.mean();
  const double var = (terms.array() - mean).square().sum() / std::max(n - 1.0, 1.0);
  return {mean, 1.96 * std::sqrt(var / n)};
}

SobolResult estimate(const UnitResponse& f, std::size_t p, std::size_t N, std::uint64_t seed, bool pairs) {
  if (N < 64) throw Error(ErrorKind::InvalidArgument, "Sobol' estimation needs N >= 64");
  if (2 * p > kSobolMaxDim) {
    throw Error(ErrorKind::DimensionUnsupported, "pick-freeze needs 2p <= " + std::to_string(kSobolMaxDim));
  }
  // A and B are the two halves of one 2p-dimensional sequence.
  const auto AB = shifted_sobol_points(N, 2 * p, seed);
  const Eigen::MatrixXd A = AB.leftCols(static_cast<Eigen::Index>(p));
  const Eigen::MatrixXd B = AB.rightCols(static_cast<Eigen::Index>(p));

  std::vector<std::pair<std::size_t, std::size_t>> pair_list;
  if (pairs) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) pair_list.emplace_back(i, j);
    }
  }
  // Block 0: A, 1: B, 2..p+1: A with column i from B, then the pair blocks.
  const std::size_t blocks = 2 + p + pair_list.size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(blocks));

  parallel_for(blocks * N, [&](std::size_t idx) {
    const std::size_t b = idx / N;
    const auto row = static_cast<Eigen::Index>(idx % N);
    std::vector<double> x(p);
    for (std::size_t k = 0; k < p; ++k) x[k] = A(row, static_cast<Eigen::Index>(k));
    if (b == 1) {
      for (std::size_t k = 0; k < p; ++k) x[k] = B(row, static_cast<Eigen::Index>(k));
    } else if (b >= 2 && b < 2 + p) {
      const auto i = static_cast<Eigen::Index>(b - 2);
      x[b - 2] = B(row, i);
    } else if (b >= 2 + p) {
      const auto [i, j] = pair_list[b - 2 - p];
      x[i] = B(row, static_cast<Eigen::Index>(i));
      x[j] = B(row, static_cast<Eigen::Index>(j));
    }
    const double y = f(x);
    if (!std::isfinite(y)) throw Error(ErrorKind::InvalidArgument, "response returned a non-finite value");
    values(row, static_cast<Eigen::Index>(b)) = y;
  });

  const Eigen::VectorXd fA = values.col(0);
  const Eigen::VectorXd fB = values.col(1);

  SobolResult r;
  r.N = N;
  r.f0 = 0.5 * (fA.mean() + fB.mean());
  const double nn = static_cast<double>(2 * N);
  r.D = ((fA.array() - r.f0).square().sum() + (fB.array() - r.f0).square().sum()) / (nn - 1.0);
  const double scale = 0.5 * (fA.cwiseAbs().mean() + fB.cwiseAbs().mean());
  if (r.D <= 1e-14 * scale * scale || r.D == 0.0) {
    throw Error(ErrorKind::ZeroVariance, "response variance is zero; indices are undefined");
  }

  std::vector<Eigen::VectorXd> main_terms(p);
  r.S_main.resize(p);
  r.ci_main.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    main_terms[i] = fB.cwiseProduct(values.col(static_cast<Eigen::Index>(2 + i)) - fA);
    const auto e = mean_ci(main_terms[i]);
    r.S_main[i] = e.mean / r.D;
    r.ci_main[i] = e.halfwidth / r.D;
  }

  if (pairs) {
    const auto P = static_cast<Eigen::Index>(p);
    r.S_pair = Eigen::MatrixXd::Zero(P, P);
    r.ci_pair = Eigen::MatrixXd::Zero(P, P);
    for (std::size_t q = 0; q < pair_list.size(); ++q) {
      const auto [i, j] = pair_list[q];
      const Eigen::VectorXd closed = fB.cwiseProduct(values.col(static_cast<Eigen::Index>(2 + p + q)) - fA);
      const auto e = mean_ci(closed - main_terms[i] - main_terms[j]);
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      r.S_pair(a, b) = r.S_pair(b, a) = e.mean / r.D;
      r.ci_pair(a, b) = r.ci_pair(b, a) = e.halfwidth / r.D;
    }
  }
  return r;
}

}  // namespace

Eigen::MatrixXd sobol_points(std::size_t N, std::size_t p) {
  return sobol_impl(N, p, std::vector<std::uint32_t>(p, 0u));
}

Eigen::MatrixXd shifted_sobol_points(std::size_t N, std::size_t p, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x50B01);
  std::vector<std::uint32_t> shift(p);
  for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
  return sobol_impl(N, p, shift);
}

SobolResult main_effect_indices(const UnitResponse& f, std::size_t p, std::size_t N, std::uint64_t seed) {
  return estimate(f, p, N, seed, false);
}

SobolResult pair_interaction_indices(const UnitResponse& f, std::size_t p, std::size_t N, std::uint64_t seed) {
  return estimate(f, p, N, seed, true);
}

SobolResult design_sensitivity(const std::function<double(const DesignPoint&)>& response, const DesignSpace& space,
                               std::size_t N, std::uint64_t seed, bool pairs) {
  const UnitResponse unit = [&](std::span<const double> u) {
    return response(denormalize(NormalizedDesign(std::vector<double>(u.begin(), u.end())), space));
  };
  return estimate(unit, space.dim(), N, seed, pairs);
}

std::string sobol_tsv(const SobolResult& r, const std::vector<std::string>& names) {
  std::ostringstream out;
  out.precision(10);
  out << "kind\tparameter\tindex\tci\n";
  for (std::size_t i = 0; i < r.S_main.size(); ++i) {
    out << "main\t" << names.at(i) << '\t' << r.S_main[i] << '\t' << r.ci_main[i] << '\n';
  }
  for (Eigen::Index i = 0; i < r.S_pair.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < r.S_pair.cols(); ++j) {
      out << "pair\t" << names.at(static_cast<std::size_t>(i)) << ':' << names.at(static_cast<std::size_t>(j))
          << '\t' << r.S_pair(i, j) << '\t' << r.ci_pair(i, j) << '\n';
    }
  }
  return out.str();
}

}  // namespace cpodem
