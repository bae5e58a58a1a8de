#pragma once

#include <cstddef>
#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace cpodem {

/// n x p design in the unit hypercube, one row per point.
using DesignMatrix = Eigen::MatrixXd;

/// psi(D) = [ (1/C(n,2)) sum_{i<j} prod_k (x_ik - x_jk)^-2 ]^(1/p); lower is
/// better. Throws DegenerateDesign when two rows share a coordinate.
double maxpro_criterion(const DesignMatrix& design);

struct AnnealingOptions {
  std::size_t n_restarts = 4;
  std::size_t n_iters = 200;       ///< sweeps; one sweep = n*p proposed swaps
  double initial_temperature = 0.1;  ///< fraction of the starting criterion
  double cooling = 0.95;           ///< geometric decay per sweep
};

struct MaxProTrace {
  /// Best-so-far criterion after each sweep, concatenated over restarts.
  std::vector<double> best_history;
  /// Criterion of each restart's random starting design.
  std::vector<double> initial_criteria;
  double final_criterion = 0.0;
  std::size_t best_restart = 0;
};

/// Latin-hypercube design with column levels (j - 0.5)/n, optimized for the
/// MaxPro criterion by simulated annealing over within-column swaps.
DesignMatrix generate_design(std::size_t n, std::size_t p, std::uint64_t seed,
                             const AnnealingOptions& options = {}, MaxProTrace* trace = nullptr);

/// Uniformly random Latin hypercube with midpoint levels.
DesignMatrix random_latin_hypercube(std::size_t n, std::size_t p, std::uint64_t seed);

struct Projection {
  std::size_t k = 0;
  std::size_t l = 0;
  std::vector<std::array<double, 2>> points;
};

/// All C(p,2) two-dimensional projections of the design.
std::vector<Projection> projection_scatter(const DesignMatrix& design);

}  // namespace cpodem
