#include "cpodem/cpod.hpp"

#include <algorithm>
#include <cmath>

#include "cpodem/eigensolver.hpp"
#include "cpodem/error.hpp"

namespace cpodem {

Ensemble assemble_ensemble(std::span<const Eigen::MatrixXd> fields, bool center) {
  if (fields.empty()) throw Error(ErrorKind::ShapeMismatch, "ensemble needs at least one case");
  const auto nodes = fields.front().rows();
  const auto T = fields.front().cols();
  for (const auto& f : fields) {
    if (f.rows() != nodes || f.cols() != T) {
      throw Error(ErrorKind::ShapeMismatch, "cases differ in node count or snapshot count");
    }
  }
  Ensemble e;
  e.cases = fields.size();
  e.steps = static_cast<std::size_t>(T);
  e.centered.resize(nodes, T * static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) e.centered.middleCols(static_cast<Eigen::Index>(i) * T, T) = fields[i];
  e.mean = Eigen::VectorXd::Zero(nodes);
  if (center) {
    e.mean = e.centered.rowwise().mean();
    e.centered.colwise() -= e.mean;
  }
  return e;
}

Ensemble assemble_ensemble(std::span<const SnapshotSeries> cases, const std::string& variable, bool center) {
  std::vector<Eigen::MatrixXd> fields;
  fields.reserve(cases.size());
  for (const auto& c : cases) {
    const auto it = c.variables.find(variable);
    if (it == c.variables.end()) throw Error(ErrorKind::ShapeMismatch, "case lacks variable '" + variable + "'");
    fields.push_back(it->second);
  }
  return assemble_ensemble(std::span<const Eigen::MatrixXd>(fields), center);
}

Eigen::MatrixXd snapshot_gram(const Eigen::MatrixXd& S, const Eigen::VectorXd& w) {
  if (w.size() != S.rows()) throw Error(ErrorKind::ShapeMismatch, "quadrature does not match the node count");
  const Eigen::MatrixXd Sw = w.cwiseSqrt().asDiagonal() * S;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(S.cols(), S.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(Sw.transpose(), 1.0 / static_cast<double>(S.cols()));
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

BasisFit compute_basis(const Ensemble& ensemble, const Eigen::VectorXd& quadrature, const BasisOptions& options) {
  const auto& S = ensemble.centered;
  const auto nT = static_cast<std::size_t>(S.cols());
  if (nT < 1) throw Error(ErrorKind::ShapeMismatch, "empty ensemble");
  if (quadrature.size() != S.rows()) throw Error(ErrorKind::ShapeMismatch, "quadrature does not match the node count");
  if ((quadrature.array() <= 0.0).any()) throw Error(ErrorKind::InvalidArgument, "quadrature weights must be positive");
  if (!(options.energy_target > 0.0 && options.energy_target <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "energy target must lie in (0, 1]");
  }

  const Eigen::MatrixXd G = snapshot_gram(S, quadrature);
  const double total = std::max(G.trace(), 0.0);

  BasisFit fit;
  fit.basis.quadrature = quadrature;
  fit.basis.mean = ensemble.mean;
  fit.basis.total_energy = total;

  const bool iterative = options.solver == EigenSolverKind::Iterative ||
                         (options.solver == EigenSolverKind::Auto && nT > options.dense_limit);
  fit.used_iterative = iterative;

  EigenResult eig;
  std::size_t K = 0;
  auto choose_k = [&](const Eigen::VectorXd& lambda, bool complete) -> bool {
    const double floor = 1e-12 * std::max(lambda.size() ? lambda(0) : 0.0, 0.0);
    double acc = 0.0;
    K = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (!(lambda(i) > floor) || lambda(i) <= 0.0) return true;  // only numerically zero energy left
      acc += lambda(i);
      K = static_cast<std::size_t>(i) + 1;
      if (total > 0.0 && acc >= options.energy_target * total * (1.0 - 1e-12)) return true;
      if (options.max_modes && K >= options.max_modes) return true;
    }
    return complete;
  };

  if (total <= 0.0) {
    K = 0;
  } else if (!iterative) {
    eig = dense_symmetric_eigen(G);
    choose_k(eig.values, true);
  } else {
    std::size_t nev = std::min<std::size_t>(nT, 32);
    for (;;) {
      eig = lanczos_symmetric_eigen(G, nev);
      fit.solver_restarts += eig.restarts;
      if (choose_k(eig.values, nev == nT) || nev == nT) break;
      nev = std::min(nT, 2 * nev);
    }
  }

  const auto Kc = static_cast<Eigen::Index>(K);
  auto& b = fit.basis;
  b.eigenvalues = eig.values.head(Kc);
  b.modes.resize(S.rows(), Kc);
  const double scale = static_cast<double>(nT);
  for (Eigen::Index k = 0; k < Kc; ++k) {
    Eigen::VectorXd phi = S * eig.vectors.col(k) / std::sqrt(scale * b.eigenvalues(k));
    // Renormalize in the weighted norm to absorb roundoff in lambda.
    phi /= std::sqrt(phi.cwiseProduct(quadrature).dot(phi));
    Eigen::Index arg = 0;
    phi.cwiseAbs().maxCoeff(&arg);
    if (phi(arg) < 0.0) phi = -phi;
    b.modes.col(k) = phi;
  }
  b.energy_fraction.resize(Kc);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < Kc; ++k) {
    acc += b.eigenvalues(k);
    b.energy_fraction(k) = total > 0.0 ? std::min(acc / total, 1.0) : 1.0;
  }

  // Coefficients by projection, stored beta[k][i][t].
  const Eigen::MatrixXd beta = b.modes.transpose() * (quadrature.asDiagonal() * S);
  fit.coefficients = CoeffTable(K, ensemble.cases, ensemble.steps);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < ensemble.cases; ++i) {
      for (std::size_t t = 0; t < ensemble.steps; ++t) {
        fit.coefficients(k, i, t) =
            beta(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i * ensemble.steps + t));
      }
    }
  }
  return fit;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& fields, const CPODBasis& basis) {
  if (fields.rows() != basis.mean.size()) throw Error(ErrorKind::ShapeMismatch, "field does not match the basis grid");
  const Eigen::MatrixXd centered = fields.colwise() - basis.mean;
  return basis.modes.transpose() * (basis.quadrature.asDiagonal() * centered);
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& beta, const CPODBasis& basis) {
  if (beta.rows() > basis.modes.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "more coefficients than basis modes");
  }
  Eigen::MatrixXd out = basis.modes.leftCols(beta.rows()) * beta;
  out.colwise() += basis.mean;
  return out;
}

double reconstruction_error(const Ensemble& ensemble, const CPODBasis& basis) {
  const auto& S = ensemble.centered;
  const Eigen::MatrixXd WS = basis.quadrature.asDiagonal() * S;
  const Eigen::MatrixXd beta = basis.modes.transpose() * WS;
  const Eigen::MatrixXd R = S - basis.modes * beta;
  const double num = (R.array().square().colwise() * basis.quadrature.array()).sum();
  const double den = (S.array() * WS.array()).sum();
  return den > 0.0 ? std::sqrt(std::max(num, 0.0) / den) : 0.0;
}

}  // namespace cpodem
