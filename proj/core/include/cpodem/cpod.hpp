#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpodem/grid.hpp"

namespace cpodem {

/// Pooled snapshot matrix: one column per (case, timestep), case-major.
struct Ensemble {
  Eigen::MatrixXd centered;  ///< nodes x (n T), mean removed when centering is on
  Eigen::VectorXd mean;      ///< pooled mean field (zero when centering is off)
  std::size_t cases = 0;
  std::size_t steps = 0;
};

/// Stacks `variable` from every case (all on one common grid, equal T) and
/// subtracts the pooled mean over all cases and times. Throws ShapeMismatch.
Ensemble assemble_ensemble(std::span<const SnapshotSeries> cases, const std::string& variable, bool center = true);
Ensemble assemble_ensemble(std::span<const Eigen::MatrixXd> fields, bool center = true);

enum class EigenSolverKind { Auto, Dense, Iterative };

struct BasisOptions {
  double energy_target = 0.99;
  EigenSolverKind solver = EigenSolverKind::Auto;
  std::size_t dense_limit = 2048;  ///< Auto uses the dense solver up to this many snapshots
  std::size_t max_modes = 0;       ///< 0 = no cap
};

struct CPODBasis {
  std::string variable;
  Eigen::VectorXd mean;
  Eigen::MatrixXd modes;             ///< nodes x K, orthonormal under the quadrature
  Eigen::VectorXd eigenvalues;       ///< K values, non-increasing
  Eigen::VectorXd energy_fraction;   ///< cumulative share of the total per mode
  Eigen::VectorXd quadrature;        ///< node weights
  double total_energy = 0.0;         ///< trace of the snapshot Gram matrix

  std::size_t size() const noexcept { return static_cast<std::size_t>(modes.cols()); }
  std::size_t nodes() const noexcept { return static_cast<std::size_t>(modes.rows()); }
  double captured_energy() const { return energy_fraction.size() ? energy_fraction(energy_fraction.size() - 1) : 0.0; }
};

/// beta[k][i][t]: mode-major, then case, then timestep.
struct CoeffTable {
  std::size_t K = 0;
  std::size_t n = 0;
  std::size_t T = 0;
  std::vector<double> data;

  CoeffTable() = default;
  CoeffTable(std::size_t K_, std::size_t n_, std::size_t T_) : K(K_), n(n_), T(T_), data(K_ * n_ * T_, 0.0) {}
  double& operator()(std::size_t k, std::size_t i, std::size_t t) { return data[(k * n + i) * T + t]; }
  double operator()(std::size_t k, std::size_t i, std::size_t t) const { return data[(k * n + i) * T + t]; }
};

struct BasisFit {
  CPODBasis basis;
  CoeffTable coefficients;
  std::size_t solver_restarts = 0;
  bool used_iterative = false;
};

/// Method of snapshots. The Gram matrix is G = S^T W S / (n T) with W the
/// quadrature; its eigenvalues are energy densities and each kept mode obeys
/// sum over (i, t) of beta_k^2 = lambda_k n T. The smallest K reaching the
/// energy target is kept. Each mode's largest-magnitude entry is positive.
BasisFit compute_basis(const Ensemble& ensemble, const Eigen::VectorXd& quadrature, const BasisOptions& options = {});

/// Gram matrix of the ensemble as used by compute_basis.
Eigen::MatrixXd snapshot_gram(const Eigen::MatrixXd& snapshots, const Eigen::VectorXd& quadrature);

/// K x T coefficients of a field series (nodes x T) on the basis grid.
Eigen::MatrixXd project(const Eigen::MatrixXd& fields, const CPODBasis& basis);

/// mean + modes[:, :K'] beta for K' = beta.rows() <= K, on the common grid.
Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& beta, const CPODBasis& basis);

/// Quadrature-weighted relative reconstruction error of a training ensemble
/// with the basis' K modes: ||S - P S||_W / ||S||_W.
double reconstruction_error(const Ensemble& ensemble, const CPODBasis& basis);

}  // namespace cpodem
