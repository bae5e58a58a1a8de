#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace cpodem {

/// Leading eigenpairs of a symmetric matrix, eigenvalues descending.
struct EigenResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  ///< one unit eigenvector per column
  std::size_t restarts = 0;
  std::size_t matvecs = 0;
};

/// All eigenpairs (nev = 0) or the nev largest, from a dense decomposition.
EigenResult dense_symmetric_eigen(const Eigen::MatrixXd& A, std::size_t nev = 0);

struct LanczosOptions {
  std::size_t ncv = 0;            ///< subspace size; 0 picks max(2 nev + 1, nev + 20)
  std::size_t max_restarts = 500;
  double tol = 1e-13;             ///< residual bound relative to the largest Ritz value
  std::uint64_t seed = 7;         ///< start vector
};

using SymmetricOperator = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

/// nev largest eigenpairs of a symmetric positive semidefinite operator by
/// restarted Lanczos with full reorthogonalization. Each restart keeps the
/// wanted Ritz vectors together with the residual direction (thick restart),
/// which is the symmetric form of implicitly restarted Arnoldi. Throws
/// SolverFailure if the restart budget runs out.
EigenResult lanczos_symmetric_eigen(const SymmetricOperator& op, std::size_t n, std::size_t nev,
                                    const LanczosOptions& options = {});

EigenResult lanczos_symmetric_eigen(const Eigen::MatrixXd& A, std::size_t nev, const LanczosOptions& options = {});

}  // namespace cpodem
