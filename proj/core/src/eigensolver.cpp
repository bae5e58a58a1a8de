#include "cpodem/eigensolver.hpp"

#include <algorithm>
#include <cmath>

#include "cpodem/error.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

EigenResult descending(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors, std::size_t nev) {
  const auto n = values.size();
  const auto k = static_cast<Eigen::Index>(nev == 0 ? static_cast<std::size_t>(n) : std::min<std::size_t>(nev, n));
  EigenResult r;
  r.values.resize(k);
  r.vectors.resize(vectors.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    r.values(i) = values(n - 1 - i);
    r.vectors.col(i) = vectors.col(n - 1 - i);
  }
  return r;
}

/// Orthogonalizes w against the first m columns of V twice (classical
/// Gram-Schmidt with one reorthogonalization); returns the coefficients.
Eigen::VectorXd orthogonalize(const Eigen::MatrixXd& V, Eigen::Index m, Eigen::VectorXd& w) {
  const auto basis = V.leftCols(m);
  Eigen::VectorXd h = basis.transpose() * w;
  w.noalias() -= basis * h;
  const Eigen::VectorXd h2 = basis.transpose() * w;
  w.noalias() -= basis * h2;
  return h + h2;
}

}  // namespace

EigenResult dense_symmetric_eigen(const Eigen::MatrixXd& A, std::size_t nev) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::ShapeMismatch, "eigensolver needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "dense eigensolver failed");
  return descending(es.eigenvalues(), es.eigenvectors(), nev);
}

EigenResult lanczos_symmetric_eigen(const SymmetricOperator& op, std::size_t n, std::size_t nev,
                                    const LanczosOptions& options) {
  if (n == 0 || nev == 0 || nev > n) throw Error(ErrorKind::InvalidArgument, "need 1 <= nev <= n");
  std::size_t ncv = options.ncv == 0 ? std::max(2 * nev + 1, nev + 20) : options.ncv;
  ncv = std::min(std::max(ncv, nev + 1), n);
  const auto m = static_cast<Eigen::Index>(ncv);
  const auto N = static_cast<Eigen::Index>(n);

  auto rng = make_rng(options.seed, 0x1A2C);
  auto random_unit = [&](Eigen::Index filled, const Eigen::MatrixXd& V) {
    Eigen::VectorXd v(N);
    for (Eigen::Index i = 0; i < N; ++i) v(i) = uniform01(rng) - 0.5;
    if (filled > 0) orthogonalize(V, filled, v);
    return Eigen::VectorXd(v / v.norm());
  };

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(N, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m + 1);
  V.col(0) = random_unit(0, V);
  Eigen::Index kept = 0;  // converged-direction count carried over from the last restart
  double beta_last = 0.0;

  EigenResult result;
  Eigen::VectorXd w(N);
  for (std::size_t restart = 0; restart <= options.max_restarts; ++restart) {
    // Expand the basis from column `kept` up to m columns.
    for (Eigen::Index j = kept; j < m; ++j) {
      op(V.col(j), w);
      ++result.matvecs;
      const Eigen::VectorXd h = orthogonalize(V, j + 1, w);
      for (Eigen::Index i = 0; i <= j; ++i) {
        // Entries that the thick restart already fixed stay as they are.
        if (i < kept && j < kept) continue;
        H(i, j) = H(j, i) = h(i);
      }
      double beta = w.norm();
      const double scale = std::max(std::abs(H(j, j)), 1.0);
      if (beta <= 1e-13 * scale) {
        // Invariant subspace: continue from a fresh direction, decoupled.
        beta = 0.0;
        if (j + 1 < N) V.col(j + 1) = random_unit(j + 1, V);
      } else {
        V.col(j + 1) = w / beta;
      }
      H(j + 1, j) = H(j, j + 1) = beta;
      beta_last = beta;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(m, m));
    if (es.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "projected eigenproblem failed");
    const auto ritz = descending(es.eigenvalues(), es.eigenvectors(), 0);

    const double top = std::max(std::abs(ritz.values(0)), 1e-300);
    bool converged = true;
    for (std::size_t i = 0; i < nev; ++i) {
      const double res = std::abs(beta_last * ritz.vectors(m - 1, static_cast<Eigen::Index>(i)));
      if (res > options.tol * top) {
        converged = false;
        break;
      }
    }
    if (converged || ncv == n) {
      const auto k = static_cast<Eigen::Index>(nev);
      result.values = ritz.values.head(k);
      result.vectors = V.leftCols(m) * ritz.vectors.leftCols(k);
      for (Eigen::Index c = 0; c < k; ++c) result.vectors.col(c).normalize();
      result.restarts = restart;
      return result;
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    kept = static_cast<Eigen::Index>(std::min<std::size_t>(nev + (ncv - nev) / 2, ncv - 1));
    const Eigen::MatrixXd Y = V.leftCols(m) * ritz.vectors.leftCols(kept);
    const Eigen::VectorXd f = V.col(m);
    const Eigen::RowVectorXd coupling = beta_last * ritz.vectors.row(m - 1).head(kept);
    V.leftCols(kept) = Y;
    V.col(kept) = f;
    H.setZero();
    for (Eigen::Index i = 0; i < kept; ++i) {
      H(i, i) = ritz.values(i);
      H(i, kept) = H(kept, i) = coupling(i);
    }
    // Re-orthonormalize the kept block to stop drift accumulating across restarts.
    for (Eigen::Index c = 0; c <= kept; ++c) {
      Eigen::VectorXd v = V.col(c);
      if (c > 0) orthogonalize(V, c, v);
      V.col(c) = v / v.norm();
    }
  }
  throw Error(ErrorKind::SolverFailure,
              "Lanczos did not converge within " + std::to_string(options.max_restarts) + " restarts");
}

EigenResult lanczos_symmetric_eigen(const Eigen::MatrixXd& A, std::size_t nev, const LanczosOptions& options) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::ShapeMismatch, "eigensolver needs a square matrix");
  const SymmetricOperator op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = A * x; };
  return lanczos_symmetric_eigen(op, static_cast<std::size_t>(A.rows()), nev, options);
}

}  // namespace cpodem
