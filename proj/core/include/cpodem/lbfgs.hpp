#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace cpodem {

struct LbfgsOptions {
  std::size_t memory = 8;
  std::size_t max_iter = 200;
  double gtol = 1e-6;   ///< stop when the projected gradient's max-norm falls below this
  double ftol = 1e-11;  ///< stop when the relative decrease falls below this
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Objective returning f(x) and writing its gradient. Returning a non-finite
/// value marks x as infeasible; the line search then backs off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Box-constrained limited-memory BFGS. Search directions come from the
/// two-loop recursion restricted to the free variables; steps are projected
/// onto the box and accepted under an Armijo condition, so f never increases
/// from one iterate to the next.
LbfgsResult minimize_lbfgs(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& options = {});

}  // namespace cpodem
