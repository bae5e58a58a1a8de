#include "cpodem/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "cpodem/error.hpp"

namespace cpodem {
namespace {

Eigen::VectorXd project_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

/// Gradient with components zeroed where a bound blocks descent.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& options) {
  const auto n = x0.size();
  if (lower.size() != n || upper.size() != n) throw Error(ErrorKind::ShapeMismatch, "bounds do not match x0");
  if ((lower.array() > upper.array()).any()) throw Error(ErrorKind::InvalidArgument, "lower bound above upper bound");

  LbfgsResult res;
  res.x = project_box(x0, lower, upper);
  Eigen::VectorXd g(n);
  res.f = f(res.x, g);
  ++res.evaluations;
  if (!std::isfinite(res.f)) return res;

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> hist;  // (s, y)
  Eigen::VectorXd g_new(n);
  for (res.iterations = 0; res.iterations < options.max_iter; ++res.iterations) {
    const Eigen::VectorXd pg = projected_gradient(res.x, g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < options.gtol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion on the free subspace.
    Eigen::VectorXd q = pg;
    std::vector<double> a(hist.size());
    for (std::size_t i = hist.size(); i-- > 0;) {
      const auto& [s, y] = hist[i];
      a[i] = s.dot(q) / y.dot(s);
      q -= a[i] * y;
    }
    if (!hist.empty()) {
      const auto& [s, y] = hist.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const auto& [s, y] = hist[i];
      const double b = y.dot(q) / y.dot(s);
      q += (a[i] - b) * s;
    }
    Eigen::VectorXd d = -q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg(i) == 0.0 && g(i) != 0.0) d(i) = 0.0;
    }
    if (!(d.dot(pg) < 0.0)) {
      hist.clear();
      d = -pg;
    }

    double step = hist.empty() ? std::min(1.0, 1.0 / std::max(d.norm(), 1e-300)) : 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = project_box(res.x + step * d, lower, upper);
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double decrease = res.f - f_new;
    res.x = x_new;
    g = g_new;
    const double f_old = res.f;
    res.f = f_new;
    if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
      hist.emplace_back(s, y);
      if (hist.size() > options.memory) hist.pop_front();
    }
    if (decrease <= options.ftol * std::max(1.0, std::abs(f_old))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  return res;
}

}  // namespace cpodem
