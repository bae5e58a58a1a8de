#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpodem/design.hpp"

namespace cpodem {

/// Highest dimension covered by the built-in direction-number table.
inline constexpr std::size_t kSobolMaxDim = 21;

/// First N points of the Sobol' sequence in [0,1)^p, starting at index 1
/// (the origin is skipped), so the first row is (0.5, ..., 0.5).
Eigen::MatrixXd sobol_points(std::size_t N, std::size_t p);

/// Same sequence with every coordinate XOR-ed by a seeded 32-bit digital shift.
Eigen::MatrixXd shifted_sobol_points(std::size_t N, std::size_t p, std::uint64_t seed);

struct SobolResult {
  double f0 = 0.0;
  double D = 0.0;
  std::vector<double> S_main;
  std::vector<double> ci_main;
  Eigen::MatrixXd S_pair;   ///< symmetric, diagonal unused (zero); empty if not estimated
  Eigen::MatrixXd ci_pair;
  std::size_t N = 0;
};

/// Response on the unit hypercube. Evaluations may run concurrently, so the
/// callable must be thread-safe.
using UnitResponse = std::function<double(std::span<const double>)>;

/// Pick-freeze estimates of first-order indices with 95% half-widths.
/// Uses (p + 2) N evaluations. Requires N >= 64 and 2p <= kSobolMaxDim.
SobolResult main_effect_indices(const UnitResponse& f, std::size_t p, std::size_t N, std::uint64_t seed);

/// Main effects plus closed-pair interaction indices S_ij = (V_ij - V_i - V_j)/D.
/// Uses (p + 2 + p(p-1)/2) N evaluations.
SobolResult pair_interaction_indices(const UnitResponse& f, std::size_t p, std::size_t N, std::uint64_t seed);

/// Sensitivity of a physical-space response; points are denormalized through `space`.
SobolResult design_sensitivity(const std::function<double(const DesignPoint&)>& response, const DesignSpace& space,
                               std::size_t N, std::uint64_t seed, bool pairs = true);

/// Tab-separated table: `kind parameter index ci`, one main row per parameter
/// and one pair row per i < j when pair indices are present.
std::string sobol_tsv(const SobolResult& r, const std::vector<std::string>& names);

}  // namespace cpodem
